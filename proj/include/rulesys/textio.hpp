/*!
  \file textio.hpp
  \brief Rule DSL, CSV datasets, and the JSON interchange format

  Rule DSL grammar (one rule per line, `#` starts a comment):

      schema {
        attribute <name> : { v1, v2, ... }            nominal domain
        attribute <name> : ordered <lo>..<hi>         integer range
        attribute <name> : ordered { v1, v2, ... }    ordered value list
        classes { c1, c2, ... }
      }
      rule <class> [:<id>] :- <cond> {, <cond>}

  with `<cond>` one of `a = v`, `a != v`, `a in {v, ...}` and, on ordered
  domains only, `a > v`, `a >= v`, `a < v`, `a <= v`. Sugar is expanded to
  explicit value sets at parse time. Names are `[A-Za-z0-9_]+` or double
  quoted strings.
*/

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "model.hpp"

namespace rulesys
{

enum class severity
{
  error,
  warning
};

/*! \brief Distinguishes malformed or dangling input from well-formed input that breaks an invariant. */
enum class diagnostic_kind
{
  syntax,
  invariant
};

struct diagnostic
{
  severity level = severity::error;
  std::size_t line = 0;
  std::size_t column = 0;
  std::string message;
  diagnostic_kind kind = diagnostic_kind::syntax;

  std::string to_string() const
  {
    std::ostringstream os;
    os << ( level == severity::error ? "error" : "warning" );
    if ( line != 0u )
      os << ":" << line << ":" << column;
    os << ": " << message;
    return os.str();
  }
};

class parse_error : public error
{
public:
  explicit parse_error( std::vector<diagnostic> diagnostics )
      : error( summarize( diagnostics ) ), diagnostics_( std::move( diagnostics ) )
  {
  }

  std::vector<diagnostic> const& diagnostics() const noexcept { return diagnostics_; }

private:
  static std::string summarize( std::vector<diagnostic> const& diags )
  {
    for ( auto const& d : diags )
      if ( d.level == severity::error )
        return d.to_string();
    return "parse error";
  }

  std::vector<diagnostic> diagnostics_;
};

/*! \brief A parsed value, present iff no error diagnostic was produced. */
template<typename T>
struct parse_result
{
  std::optional<T> value;
  std::vector<diagnostic> diagnostics;

  bool ok() const noexcept { return value.has_value(); }

  bool has_invariant_errors() const
  {
    return std::any_of( diagnostics.begin(), diagnostics.end(), []( auto const& d ) {
      return d.level == severity::error && d.kind == diagnostic_kind::invariant;
    } );
  }

  bool has_syntax_errors() const
  {
    return std::any_of( diagnostics.begin(), diagnostics.end(), []( auto const& d ) {
      return d.level == severity::error && d.kind == diagnostic_kind::syntax;
    } );
  }

  T const& get() const&
  {
    if ( !value )
      throw parse_error( diagnostics );
    return *value;
  }

  T&& get() &&
  {
    if ( !value )
      throw parse_error( diagnostics );
    return std::move( *value );
  }
};

namespace detail
{

enum class tok
{
  word,
  string,
  lbrace,
  rbrace,
  comma,
  colon,
  turnstile,
  eq,
  neq,
  gt,
  ge,
  lt,
  le,
  dotdot,
  newline,
  end
};

struct token
{
  tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

inline bool is_word_char( char c )
{
  return ( c >= 'a' && c <= 'z' ) || ( c >= 'A' && c <= 'Z' ) || ( c >= '0' && c <= '9' ) || c == '_';
}

inline bool is_bare_name( std::string_view s )
{
  if ( s.empty() )
    return false;
  auto body = s;
  if ( body.front() == '-' )
  {
    body.remove_prefix( 1 );
    if ( body.empty() || !( body.front() >= '0' && body.front() <= '9' ) )
      return false;
  }
  return std::all_of( body.begin(), body.end(), is_word_char );
}

inline std::string quote_name( std::string_view s )
{
  if ( is_bare_name( s ) )
    return std::string( s );
  std::string out = "\"";
  for ( char c : s )
  {
    if ( c == '"' || c == '\\' )
      out += '\\';
    out += c;
  }
  return out + "\"";
}

inline std::vector<token> lex( std::string_view text, std::vector<diagnostic>& diags )
{
  std::vector<token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto push = [&]( tok k, std::string t, std::size_t c ) { out.push_back( { k, std::move( t ), line, c } ); };

  while ( i < text.size() )
  {
    char const c = text[i];
    std::size_t const start_col = col;
    if ( c == '\n' )
    {
      push( tok::newline, "\\n", start_col );
      ++i;
      ++line;
      col = 1;
      continue;
    }
    if ( c == ' ' || c == '\t' || c == '\r' )
    {
      ++i;
      ++col;
      continue;
    }
    if ( c == '#' )
    {
      while ( i < text.size() && text[i] != '\n' )
        ++i;
      continue;
    }
    auto two = text.substr( i, 2 );
    auto single = [&]( tok k, std::size_t len ) {
      push( k, std::string( text.substr( i, len ) ), start_col );
      i += len;
      col += len;
    };
    if ( two == ":-" )
      single( tok::turnstile, 2 );
    else if ( two == "!=" )
      single( tok::neq, 2 );
    else if ( two == ">=" )
      single( tok::ge, 2 );
    else if ( two == "<=" )
      single( tok::le, 2 );
    else if ( two == ".." )
      single( tok::dotdot, 2 );
    else if ( c == '{' )
      single( tok::lbrace, 1 );
    else if ( c == '}' )
      single( tok::rbrace, 1 );
    else if ( c == ',' )
      single( tok::comma, 1 );
    else if ( c == ':' )
      single( tok::colon, 1 );
    else if ( c == '=' )
      single( tok::eq, 1 );
    else if ( c == '>' )
      single( tok::gt, 1 );
    else if ( c == '<' )
      single( tok::lt, 1 );
    else if ( c == '"' )
    {
      std::string value;
      ++i;
      ++col;
      bool closed = false;
      while ( i < text.size() && text[i] != '\n' )
      {
        if ( text[i] == '\\' && i + 1 < text.size() )
        {
          value += text[i + 1];
          i += 2;
          col += 2;
          continue;
        }
        if ( text[i] == '"' )
        {
          closed = true;
          ++i;
          ++col;
          break;
        }
        value += text[i++];
        ++col;
      }
      if ( !closed )
        diags.push_back( { severity::error, line, start_col, "unterminated string", diagnostic_kind::syntax } );
      push( tok::string, std::move( value ), start_col );
    }
    else if ( is_word_char( c ) || ( c == '-' && i + 1 < text.size() && text[i + 1] >= '0' && text[i + 1] <= '9' ) )
    {
      std::size_t j = i + 1;
      while ( j < text.size() && is_word_char( text[j] ) )
        ++j;
      push( tok::word, std::string( text.substr( i, j - i ) ), start_col );
      col += j - i;
      i = j;
    }
    else
    {
      diags.push_back( { severity::error, line, start_col, std::string( "unexpected character '" ) + c + "'",
                         diagnostic_kind::syntax } );
      ++i;
      ++col;
    }
  }
  out.push_back( { tok::end, "end of input", line, col } );
  return out;
}

inline std::optional<std::int64_t> to_int( std::string_view s )
{
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars( s.data(), s.data() + s.size(), v );
  if ( ec != std::errc{} || p != s.data() + s.size() )
    return std::nullopt;
  return v;
}

/*! \brief Recursive-descent parser over the token stream; records diagnostics instead of throwing. */
class dsl_parser
{
public:
  explicit dsl_parser( std::string_view text ) { tokens_ = lex( text, diags_ ); }

  std::vector<diagnostic>& diagnostics() { return diags_; }

  bool failed() const
  {
    return std::any_of( diags_.begin(), diags_.end(), []( auto const& d ) { return d.level == severity::error; } );
  }

  token const& peek() const { return tokens_[pos_]; }
  token const& next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
  bool at( tok k ) const { return peek().kind == k; }
  bool at_word( std::string_view w ) const { return at( tok::word ) && peek().text == w; }

  void skip_newlines()
  {
    while ( at( tok::newline ) )
      next();
  }

  void error_at( token const& t, std::string msg, diagnostic_kind kind = diagnostic_kind::syntax )
  {
    diags_.push_back( { severity::error, t.line, t.column, std::move( msg ), kind } );
  }

  void sync_line()
  {
    while ( !at( tok::newline ) && !at( tok::end ) )
      next();
  }

  bool expect( tok k, std::string_view what )
  {
    if ( at( k ) )
    {
      next();
      return true;
    }
    error_at( peek(), "expected " + std::string( what ) + ", found '" + peek().text + "'" );
    return false;
  }

  std::optional<std::string> name( std::string_view what )
  {
    if ( at( tok::word ) || at( tok::string ) )
      return next().text;
    error_at( peek(), "expected " + std::string( what ) + ", found '" + peek().text + "'" );
    return std::nullopt;
  }

  /*! \brief `{ n1, n2, ... }`; newlines allowed inside. Empty lists are returned as-is. */
  std::optional<std::vector<std::pair<std::string, token>>> name_list( std::string_view what )
  {
    if ( !expect( tok::lbrace, "'{'" ) )
      return std::nullopt;
    std::vector<std::pair<std::string, token>> out;
    skip_newlines();
    if ( at( tok::rbrace ) )
    {
      next();
      return out;
    }
    while ( true )
    {
      skip_newlines();
      auto t = peek();
      auto n = name( what );
      if ( !n )
        return std::nullopt;
      out.emplace_back( *n, t );
      skip_newlines();
      if ( at( tok::comma ) )
      {
        next();
        continue;
      }
      if ( expect( tok::rbrace, "',' or '}'" ) )
        return out;
      return std::nullopt;
    }
  }

  struct schema_decl
  {
    std::vector<attribute> attributes;
    std::vector<std::string> classes;
    bool has_classes = false;
  };

  bool parse_attribute( schema_decl& decl )
  {
    next(); // 'attribute'
    auto name_tok = peek();
    auto attr_name = name( "attribute name" );
    if ( !attr_name || !expect( tok::colon, "':'" ) )
      return false;
    for ( auto const& a : decl.attributes )
      if ( a.name == *attr_name )
      {
        error_at( name_tok, "duplicate attribute '" + *attr_name + "'", diagnostic_kind::invariant );
        return false;
      }

    attribute attr{ *attr_name, {}, false };
    if ( at_word( "ordered" ) )
    {
      next();
      attr.ordered = true;
      if ( !at( tok::lbrace ) )
      {
        auto lo_tok = peek();
        auto lo_text = name( "range lower bound" );
        if ( !lo_text || !expect( tok::dotdot, "'..'" ) )
          return false;
        auto hi_text = name( "range upper bound" );
        if ( !hi_text )
          return false;
        auto lo = to_int( *lo_text ), hi = to_int( *hi_text );
        if ( !lo || !hi )
        {
          error_at( lo_tok, "malformed range '" + *lo_text + ".." + *hi_text + "': bounds must be integers" );
          return false;
        }
        if ( *lo > *hi )
        {
          error_at( lo_tok, "malformed range '" + *lo_text + ".." + *hi_text + "': lower bound exceeds upper bound" );
          return false;
        }
        if ( static_cast<std::uint64_t>( *hi - *lo ) >= schema::default_domain_bound )
        {
          error_at( lo_tok, "range of '" + attr.name + "' exceeds " + std::to_string( schema::default_domain_bound ) + " values",
                    diagnostic_kind::invariant );
          return false;
        }
        for ( auto v = *lo; v <= *hi; ++v )
          attr.values.push_back( std::to_string( v ) );
        decl.attributes.push_back( std::move( attr ) );
        return true;
      }
    }
    auto list_tok = peek();
    auto values = name_list( "domain value" );
    if ( !values )
      return false;
    if ( values->empty() )
    {
      error_at( list_tok, "attribute '" + attr.name + "' has an empty domain", diagnostic_kind::invariant );
      return false;
    }
    for ( auto const& [v, t] : *values )
    {
      if ( std::find( attr.values.begin(), attr.values.end(), v ) != attr.values.end() )
      {
        error_at( t, "duplicate value '" + v + "' in domain of '" + attr.name + "'", diagnostic_kind::invariant );
        return false;
      }
      attr.values.push_back( v );
    }
    decl.attributes.push_back( std::move( attr ) );
    return true;
  }

  bool parse_classes( schema_decl& decl )
  {
    auto kw = next(); // 'classes'
    if ( decl.has_classes )
    {
      error_at( kw, "classes declared twice", diagnostic_kind::invariant );
      return false;
    }
    auto names = name_list( "class name" );
    if ( !names )
      return false;
    decl.has_classes = true;
    for ( auto const& [c, t] : *names )
    {
      if ( std::find( decl.classes.begin(), decl.classes.end(), c ) != decl.classes.end() )
      {
        error_at( t, "duplicate class '" + c + "'", diagnostic_kind::invariant );
        return false;
      }
      decl.classes.push_back( c );
    }
    return true;
  }

  /*! \brief Declarations until `}` (when `braced`) or until something that is not a declaration. */
  schema_decl parse_decls( bool braced )
  {
    schema_decl decl;
    while ( true )
    {
      skip_newlines();
      if ( braced && at( tok::rbrace ) )
      {
        next();
        break;
      }
      if ( at_word( "attribute" ) )
      {
        if ( !parse_attribute( decl ) )
          sync_line();
      }
      else if ( at_word( "classes" ) )
      {
        if ( !parse_classes( decl ) )
          sync_line();
      }
      else if ( braced )
      {
        error_at( peek(), "expected 'attribute', 'classes' or '}', found '" + peek().text + "'" );
        if ( at( tok::end ) )
          break;
        sync_line();
      }
      else
        break;
    }
    return decl;
  }

  std::optional<schema_ptr> build_schema( schema_decl decl, token const& where )
  {
    if ( decl.attributes.empty() )
    {
      error_at( where, "schema declares no attributes", diagnostic_kind::invariant );
      return std::nullopt;
    }
    if ( decl.classes.size() < 2u )
    {
      error_at( where, "schema must declare at least 2 classes, found " + std::to_string( decl.classes.size() ),
                diagnostic_kind::invariant );
      return std::nullopt;
    }
    try
    {
      return std::make_shared<schema const>( std::move( decl.attributes ), std::move( decl.classes ) );
    }
    catch ( schema_error const& e )
    {
      error_at( where, e.what(), diagnostic_kind::invariant );
      return std::nullopt;
    }
  }

  /*! \brief `schema { ... }` or a bare list of declarations. */
  std::optional<schema_ptr> parse_schema_section( bool require_keyword )
  {
    skip_newlines();
    auto const where = peek();
    if ( at_word( "schema" ) )
    {
      next();
      skip_newlines();
      if ( !expect( tok::lbrace, "'{'" ) )
        return std::nullopt;
      auto decl = parse_decls( true );
      if ( failed() )
        return std::nullopt;
      return build_schema( std::move( decl ), where );
    }
    if ( require_keyword )
      return std::nullopt;
    auto decl = parse_decls( false );
    if ( failed() )
      return std::nullopt;
    return build_schema( std::move( decl ), where );
  }

  /*! \brief Parses one condition, intersecting into `conds`. */
  bool parse_condition( schema const& s, std::map<std::size_t, value_set>& conds )
  {
    auto attr_tok = peek();
    auto attr_name = name( "attribute name" );
    if ( !attr_name )
      return false;
    auto a = s.find_attribute( *attr_name );
    if ( !a )
    {
      error_at( attr_tok, "unknown attribute '" + *attr_name + "'" );
      return false;
    }
    auto const& attr = s.attribute_at( *a );
    auto const n = attr.values.size();

    auto lookup = [&]( std::string const& v, token const& t ) -> std::optional<std::size_t> {
      auto idx = s.find_value( *a, v );
      if ( !idx )
        error_at( t, "value '" + v + "' is not in the domain of '" + attr.name + "'" );
      return idx;
    };

    value_set values( n );
    auto op = peek();
    if ( at_word( "in" ) )
    {
      next();
      auto list_tok = peek();
      auto names = name_list( "value" );
      if ( !names )
        return false;
      if ( names->empty() )
      {
        error_at( list_tok, "empty value set for '" + attr.name + "'" );
        return false;
      }
      for ( auto const& [v, t] : *names )
      {
        auto idx = lookup( v, t );
        if ( !idx )
          return false;
        values.insert( *idx );
      }
    }
    else if ( at( tok::eq ) || at( tok::neq ) || at( tok::gt ) || at( tok::ge ) || at( tok::lt ) || at( tok::le ) )
    {
      next();
      auto val_tok = peek();
      auto v = name( "value" );
      if ( !v )
        return false;
      auto idx = lookup( *v, val_tok );
      if ( !idx )
        return false;
      bool const comparison = op.kind != tok::eq && op.kind != tok::neq;
      if ( comparison && !attr.ordered )
      {
        error_at( op, "operator '" + op.text + "' requires an ordered domain, '" + attr.name + "' is nominal" );
        return false;
      }
      switch ( op.kind )
      {
      case tok::eq:
        values.insert( *idx );
        break;
      case tok::neq:
        values = value_set( n, { *idx } ).complement();
        break;
      case tok::gt:
        if ( *idx + 1 < n )
          values = value_set::range( n, *idx + 1, n - 1 );
        break;
      case tok::ge:
        values = value_set::range( n, *idx, n - 1 );
        break;
      case tok::lt:
        if ( *idx > 0 )
          values = value_set::range( n, 0, *idx - 1 );
        break;
      default:
        values = value_set::range( n, 0, *idx );
        break;
      }
      if ( values.empty() )
      {
        error_at( op, "condition '" + attr.name + " " + op.text + " " + *v + "' accepts no value" );
        return false;
      }
    }
    else
    {
      error_at( op, "expected an operator after '" + attr.name + "', found '" + op.text + "'" );
      return false;
    }

    if ( auto it = conds.find( *a ); it != conds.end() )
    {
      it->second &= values;
      if ( it->second.empty() )
      {
        error_at( attr_tok, "conditions on '" + attr.name + "' accept no common value" );
        return false;
      }
    }
    else
      conds.emplace( *a, std::move( values ) );
    return true;
  }

  /*! \brief `rule <class> [:<id>] :- <cond>, ...` up to end of line. */
  std::optional<rule> parse_rule( schema const& s, std::size_t ordinal )
  {
    next(); // 'rule'
    auto class_tok = peek();
    auto class_name = name( "class name" );
    if ( !class_name )
      return std::nullopt;
    auto c = s.find_class( *class_name );
    if ( !c )
    {
      error_at( class_tok, "unknown class '" + *class_name + "'" );
      return std::nullopt;
    }
    rule r;
    r.class_id = *c;
    r.id = "R" + std::to_string( ordinal );
    if ( at( tok::colon ) )
    {
      next();
      auto id = name( "rule id" );
      if ( !id )
        return std::nullopt;
      r.id = *id;
    }
    if ( !expect( tok::turnstile, "':-'" ) )
      return std::nullopt;
    if ( at( tok::newline ) || at( tok::end ) )
    {
      error_at( peek(), "rule '" + r.id + "' has an empty condition list" );
      return std::nullopt;
    }
    while ( true )
    {
      if ( !parse_condition( s, r.conditions ) )
        return std::nullopt;
      if ( at( tok::comma ) )
      {
        next();
        continue;
      }
      if ( at( tok::newline ) || at( tok::end ) )
        break;
      error_at( peek(), "expected ',' or end of line, found '" + peek().text + "'" );
      return std::nullopt;
    }
    return r;
  }

private:
  std::vector<token> tokens_;
  std::size_t pos_ = 0;
  std::vector<diagnostic> diags_;
};

inline std::string trim( std::string_view s )
{
  auto const ws = " \t\r\n";
  auto b = s.find_first_not_of( ws );
  if ( b == std::string_view::npos )
    return {};
  auto e = s.find_last_not_of( ws );
  return std::string( s.substr( b, e - b + 1 ) );
}

} // namespace detail

/*! \brief Parses a schema given as `schema { ... }` or as bare declarations. */
inline parse_result<schema_ptr> parse_schema( std::string_view text )
{
  detail::dsl_parser p( text );
  parse_result<schema_ptr> result;
  auto s = p.parse_schema_section( false );
  p.skip_newlines();
  if ( s && !p.at( detail::tok::end ) )
  {
    p.error_at( p.peek(), "unexpected '" + p.peek().text + "' after the schema" );
    s.reset();
  }
  if ( s && !p.failed() )
    result.value = *s;
  result.diagnostics = std::move( p.diagnostics() );
  return result;
}

namespace detail
{

inline parse_result<rule_system> parse_rules_with( dsl_parser& p, std::optional<schema_ptr> given )
{
  parse_result<rule_system> result;
  p.skip_newlines();

  schema_ptr s;
  if ( p.at_word( "schema" ) )
  {
    auto where = p.peek();
    auto embedded = p.parse_schema_section( true );
    if ( !embedded )
    {
      result.diagnostics = std::move( p.diagnostics() );
      return result;
    }
    if ( given && !same_schema( **given, **embedded ) )
    {
      p.error_at( where, "embedded schema differs from the schema supplied separately", diagnostic_kind::invariant );
      result.diagnostics = std::move( p.diagnostics() );
      return result;
    }
    s = given ? *given : *embedded;
  }
  else if ( given )
    s = *given;
  else
  {
    p.error_at( p.peek(), "missing schema block" );
    result.diagnostics = std::move( p.diagnostics() );
    return result;
  }

  std::vector<rule> rules;
  std::vector<token> rule_tokens;
  std::size_t ordinal = 0;
  while ( true )
  {
    p.skip_newlines();
    if ( p.at( tok::end ) )
      break;
    if ( !p.at_word( "rule" ) )
    {
      p.error_at( p.peek(), "expected 'rule', found '" + p.peek().text + "'" );
      p.sync_line();
      continue;
    }
    auto where = p.peek();
    auto r = p.parse_rule( *s, ++ordinal );
    if ( !r )
    {
      p.sync_line();
      continue;
    }
    bool duplicate = std::any_of( rules.begin(), rules.end(), [&]( auto const& o ) { return o.id == r->id; } );
    if ( duplicate )
    {
      p.error_at( where, "duplicate rule id '" + r->id + "'", diagnostic_kind::invariant );
      continue;
    }
    rules.push_back( std::move( *r ) );
    rule_tokens.push_back( where );
  }

  if ( !p.failed() )
  {
    try
    {
      rule_system sys( s, std::move( rules ) );
      for ( auto const& w : sys.warnings() )
        p.diagnostics().push_back( { severity::warning, 0, 0, w, diagnostic_kind::invariant } );
      result.value.emplace( std::move( sys ) );
    }
    catch ( error const& e )
    {
      p.diagnostics().push_back( { severity::error, 0, 0, e.what(), diagnostic_kind::invariant } );
    }
  }
  result.diagnostics = std::move( p.diagnostics() );
  return result;
}

} // namespace detail

/*! \brief Parses rule lines against `s`; an embedded schema block must equal `s`. */
inline parse_result<rule_system> parse_system( std::string_view text, schema_ptr s )
{
  detail::dsl_parser p( text );
  return detail::parse_rules_with( p, std::move( s ) );
}

/*! \brief Parses a self-contained document: schema block followed by rule lines. */
inline parse_result<rule_system> parse_system_document( std::string_view text )
{
  detail::dsl_parser p( text );
  return detail::parse_rules_with( p, std::nullopt );
}

/*! \brief CSV column layout. Without a header row and without `columns`, the
 * layout is the schema attribute order followed by the label column. */
struct csv_options
{
  std::optional<std::vector<std::string>> columns;
  std::string label_column = "class";
};

/*! \brief Reads labeled objects from comma-separated text.
 *
 * Fields are trimmed, empty lines and lines starting with `#` are skipped,
 * and every value must be spelled exactly as in the schema.
 */
inline parse_result<dataset> parse_dataset( std::string_view text, schema_ptr s, csv_options const& options = {} )
{
  parse_result<dataset> result;
  auto& diags = result.diagnostics;
  auto fail = [&]( std::size_t line, std::size_t col, std::string msg ) {
    diags.push_back( { severity::error, line, col, std::move( msg ), diagnostic_kind::syntax } );
  };

  struct field
  {
    std::string text;
    std::size_t column;
  };
  auto split = []( std::string_view line ) {
    std::vector<field> out;
    std::size_t start = 0;
    while ( true )
    {
      auto comma = line.find( ',', start );
      auto piece = line.substr( start, comma == std::string_view::npos ? std::string_view::npos : comma - start );
      auto lead = piece.find_first_not_of( " \t" );
      out.push_back( { detail::trim( piece ), start + 1 + ( lead == std::string_view::npos ? 0 : lead ) } );
      if ( comma == std::string_view::npos )
        break;
      start = comma + 1;
    }
    return out;
  };

  std::vector<std::string> columns;
  if ( options.columns )
    columns = *options.columns;
  else
  {
    for ( auto const& a : s->attributes() )
      columns.push_back( a.name );
    columns.push_back( options.label_column );
  }

  std::vector<data_object> rows;
  std::vector<std::size_t> attr_of_column;
  std::optional<std::size_t> label_pos;
  bool layout_ready = false;

  auto resolve_layout = [&]( std::vector<std::string> const& names, std::size_t line ) {
    attr_of_column.assign( names.size(), std::numeric_limits<std::size_t>::max() );
    label_pos.reset();
    std::vector<bool> seen( s->num_attributes(), false );
    for ( std::size_t i = 0; i < names.size(); ++i )
    {
      if ( names[i] == options.label_column )
      {
        if ( label_pos )
        {
          fail( line, 1, "label column '" + names[i] + "' appears twice" );
          return false;
        }
        label_pos = i;
        continue;
      }
      auto a = s->find_attribute( names[i] );
      if ( !a )
      {
        fail( line, 1, "column '" + names[i] + "' is neither an attribute nor the label column" );
        return false;
      }
      if ( seen[*a] )
      {
        fail( line, 1, "attribute column '" + names[i] + "' appears twice" );
        return false;
      }
      seen[*a] = true;
      attr_of_column[i] = *a;
    }
    if ( !label_pos )
    {
      fail( line, 1, "no label column '" + options.label_column + "'" );
      return false;
    }
    for ( std::size_t a = 0; a < seen.size(); ++a )
      if ( !seen[a] )
      {
        fail( line, 1, "missing column for attribute '" + s->attribute_at( a ).name + "'" );
        return false;
      }
    return true;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while ( pos <= text.size() )
  {
    auto nl = text.find( '\n', pos );
    auto raw = text.substr( pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos );
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    auto line = detail::trim( raw );
    if ( line.empty() || line.front() == '#' )
      continue;
    auto fields = split( raw );

    if ( !layout_ready )
    {
      layout_ready = true;
      std::vector<std::string> names;
      for ( auto const& f : fields )
        names.push_back( f.text );
      bool const header = std::all_of( names.begin(), names.end(), [&]( auto const& n ) {
        return n == options.label_column || s->find_attribute( n ).has_value();
      } );
      if ( header )
      {
        if ( !resolve_layout( names, line_no ) )
          return result;
        continue;
      }
      if ( !resolve_layout( columns, 0 ) )
        return result;
    }

    if ( fields.size() != attr_of_column.size() )
    {
      fail( line_no, 1, "expected " + std::to_string( attr_of_column.size() ) + " fields, found " + std::to_string( fields.size() ) );
      continue;
    }
    data_object row;
    row.values.assign( s->num_attributes(), 0u );
    bool row_ok = true;
    for ( std::size_t i = 0; i < fields.size() && row_ok; ++i )
    {
      if ( i == *label_pos )
      {
        auto c = s->find_class( fields[i].text );
        if ( !c )
        {
          fail( line_no, fields[i].column, "unknown label '" + fields[i].text + "'" );
          row_ok = false;
        }
        else
          row.label = *c;
        continue;
      }
      auto a = attr_of_column[i];
      auto v = s->find_value( a, fields[i].text );
      if ( !v )
      {
        fail( line_no, fields[i].column,
              "value '" + fields[i].text + "' is not in the domain of '" + s->attribute_at( a ).name + "'" );
        row_ok = false;
      }
      else
        row.values[a] = *v;
    }
    if ( row_ok )
      rows.push_back( std::move( row ) );
  }

  if ( std::none_of( diags.begin(), diags.end(), []( auto const& d ) { return d.level == severity::error; } ) )
    result.value.emplace( std::move( s ), std::move( rows ) );
  return result;
}

enum class system_format
{
  dsl,
  interchange
};

inline constexpr int interchange_format_version = 1;

namespace detail
{

inline bool is_integer_range( attribute const& a )
{
  if ( !a.ordered || a.values.empty() )
    return false;
  auto first = to_int( a.values.front() );
  if ( !first )
    return false;
  for ( std::size_t i = 0; i < a.values.size(); ++i )
    if ( a.values[i] != std::to_string( *first + static_cast<std::int64_t>( i ) ) )
      return false;
  return true;
}

inline std::string join_names( std::vector<std::string> const& names )
{
  std::string out;
  for ( std::size_t i = 0; i < names.size(); ++i )
    out += ( i ? ", " : "" ) + quote_name( names[i] );
  return out;
}

inline std::string format_condition( attribute const& attr, value_set const& values )
{
  auto members = values.members();
  auto const n = attr.values.size();
  auto const name = quote_name( attr.name );
  if ( members.size() == 1u )
    return name + " = " + quote_name( attr.values[members.front()] );
  bool const contiguous = !members.empty() && members.back() - members.front() + 1 == members.size();
  if ( attr.ordered && contiguous && members.size() < n )
  {
    if ( members.front() == 0u )
      return name + " <= " + quote_name( attr.values[members.back()] );
    if ( members.back() == n - 1 )
      return name + " >= " + quote_name( attr.values[members.front()] );
  }
  std::vector<std::string> names;
  for ( auto m : members )
    names.push_back( attr.values[m] );
  return name + " in {" + join_names( names ) + "}";
}

} // namespace detail

inline std::string serialize_schema( schema const& s )
{
  std::ostringstream os;
  os << "schema {\n";
  for ( auto const& a : s.attributes() )
  {
    os << "  attribute " << detail::quote_name( a.name ) << " : ";
    if ( detail::is_integer_range( a ) )
      os << "ordered " << a.values.front() << ".." << a.values.back();
    else
      os << ( a.ordered ? "ordered " : "" ) << "{" << detail::join_names( a.values ) << "}";
    os << "\n";
  }
  os << "  classes {" << detail::join_names( s.classes() ) << "}\n";
  os << "}\n";
  return os.str();
}

inline std::string format_rule( rule const& r, schema const& s )
{
  std::string out = "rule " + detail::quote_name( s.class_name( r.class_id ) ) + " :" + detail::quote_name( r.id ) + " :- ";
  bool first = true;
  for ( auto const& [a, values] : r.conditions )
  {
    out += ( first ? "" : ", " ) + detail::format_condition( s.attribute_at( a ), values );
    first = false;
  }
  return out;
}

inline nlohmann::ordered_json schema_to_json( schema const& s )
{
  nlohmann::ordered_json attrs = nlohmann::ordered_json::array();
  for ( auto const& a : s.attributes() )
    attrs.push_back( { { "name", a.name }, { "ordered", a.ordered }, { "values", a.values } } );
  return { { "attributes", attrs }, { "classes", s.classes() } };
}

inline nlohmann::ordered_json rule_to_json( rule const& r, schema const& s )
{
  nlohmann::ordered_json conds = nlohmann::ordered_json::array();
  for ( auto const& [a, values] : r.conditions )
  {
    std::vector<std::string> names;
    for ( auto m : values.members() )
      names.push_back( s.attribute_at( a ).values[m] );
    conds.push_back( { { "attribute", s.attribute_at( a ).name }, { "values", names } } );
  }
  return { { "id", r.id }, { "class", s.class_name( r.class_id ) }, { "conditions", conds } };
}

inline nlohmann::ordered_json system_to_json( rule_system const& sys, std::vector<std::string> const& provenance = {} )
{
  nlohmann::ordered_json rules = nlohmann::ordered_json::array();
  for ( auto const& r : sys.rules() )
    rules.push_back( rule_to_json( r, sys.get_schema() ) );
  return { { "format_version", interchange_format_version },
           { "kind", "rule_system" },
           { "provenance", provenance },
           { "schema", schema_to_json( sys.get_schema() ) },
           { "rules", rules },
           { "warnings", sys.warnings() } };
}

/*! \brief Deterministic text form of a system. DSL output embeds the schema
 * block, so `parse_system_document` reads it back. */
inline std::string serialize_system( rule_system const& sys, system_format format = system_format::dsl,
                                     std::vector<std::string> const& provenance = {} )
{
  if ( format == system_format::interchange )
    return system_to_json( sys, provenance ).dump( 2 ) + "\n";

  std::ostringstream os;
  for ( auto const& p : provenance )
    os << "# " << p << "\n";
  os << "# " << sys.size() << " rules\n";
  for ( auto const& w : sys.warnings() )
    os << "# warning: " << w << "\n";
  os << serialize_schema( sys.get_schema() ) << "\n";
  for ( auto const& r : sys.rules() )
    os << format_rule( r, sys.get_schema() ) << "\n";
  return os.str();
}

/*! \brief Reads an interchange document produced by `serialize_system`. */
inline parse_result<rule_system> parse_interchange_system( std::string_view text )
{
  parse_result<rule_system> result;
  auto fail = [&]( std::string msg, diagnostic_kind kind = diagnostic_kind::syntax ) {
    result.diagnostics.push_back( { severity::error, 0, 0, std::move( msg ), kind } );
    return result;
  };
  nlohmann::json doc;
  try
  {
    doc = nlohmann::json::parse( text );
  }
  catch ( nlohmann::json::parse_error const& e )
  {
    return fail( std::string( "malformed JSON: " ) + e.what() );
  }
  try
  {
    if ( doc.value( "kind", std::string{} ) != "rule_system" )
      return fail( "document kind is not 'rule_system'" );
    if ( doc.value( "format_version", 0 ) != interchange_format_version )
      return fail( "unsupported format_version" );

    std::vector<attribute> attrs;
    for ( auto const& a : doc.at( "schema" ).at( "attributes" ) )
      attrs.push_back( { a.at( "name" ).get<std::string>(), a.at( "values" ).get<std::vector<std::string>>(),
                         a.value( "ordered", false ) } );
    schema_ptr s;
    try
    {
      s = std::make_shared<schema const>( std::move( attrs ),
                                          doc.at( "schema" ).at( "classes" ).get<std::vector<std::string>>() );
    }
    catch ( schema_error const& e )
    {
      return fail( e.what(), diagnostic_kind::invariant );
    }

    std::vector<rule> rules;
    for ( auto const& jr : doc.at( "rules" ) )
    {
      rule r;
      r.id = jr.at( "id" ).get<std::string>();
      auto c = s->find_class( jr.at( "class" ).get<std::string>() );
      if ( !c )
        return fail( "rule '" + r.id + "' concludes unknown class" );
      r.class_id = *c;
      for ( auto const& jc : jr.at( "conditions" ) )
      {
        auto a = s->find_attribute( jc.at( "attribute" ).get<std::string>() );
        if ( !a )
          return fail( "rule '" + r.id + "' constrains unknown attribute" );
        value_set values( s->domain_size( *a ) );
        for ( auto const& v : jc.at( "values" ) )
        {
          auto idx = s->find_value( *a, v.get<std::string>() );
          if ( !idx )
            return fail( "rule '" + r.id + "': value '" + v.get<std::string>() + "' outside the domain" );
          values.insert( *idx );
        }
        if ( values.empty() )
          return fail( "rule '" + r.id + "': empty value set" );
        if ( !r.conditions.emplace( *a, std::move( values ) ).second )
          return fail( "rule '" + r.id + "' constrains an attribute twice" );
      }
      rules.push_back( std::move( r ) );
    }
    try
    {
      result.value.emplace( s, std::move( rules ) );
      for ( auto const& w : result.value->warnings() )
        result.diagnostics.push_back( { severity::warning, 0, 0, w, diagnostic_kind::invariant } );
    }
    catch ( error const& e )
    {
      return fail( e.what(), diagnostic_kind::invariant );
    }
  }
  catch ( nlohmann::json::exception const& e )
  {
    return fail( std::string( "malformed interchange document: " ) + e.what() );
  }
  return result;
}

} // namespace rulesys
