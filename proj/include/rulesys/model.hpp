/*!
  \file model.hpp
  \brief Schemas, rules, rule systems and datasets over finite attribute domains

  A classification system is an ordered list of assignment rules. Each rule is
  a conjunction of elementary conditions `attribute in V` and concludes one
  class. Grouping the rules by class gives the overall rule of that class.
  Attributes that a rule does not constrain accept their full domain.
*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "value_set.hpp"

namespace rulesys
{

/*! \brief One attribute h_q and its finite domain D_q (values in declared order). */
struct attribute
{
  std::string name;
  std::vector<std::string> values;
  bool ordered = false;

  friend bool operator==( attribute const&, attribute const& ) = default;
};

/*! \brief Attributes, their domains, and the class labels of a classification problem.
 *
 * Immutable after construction; construction validates every invariant and
 * throws `schema_error` on violation.
 */
class schema
{
public:
  static constexpr std::size_t default_domain_bound = 10'000;

  schema( std::vector<attribute> attributes, std::vector<std::string> classes,
          std::size_t domain_bound = default_domain_bound )
      : attributes_( std::move( attributes ) ), classes_( std::move( classes ) )
  {
    if ( attributes_.empty() )
      throw schema_error( "schema declares no attributes" );
    if ( classes_.size() < 2u )
      throw schema_error( "schema must declare at least 2 classes, found " + std::to_string( classes_.size() ) );

    value_index_.resize( attributes_.size() );
    for ( std::size_t a = 0; a < attributes_.size(); ++a )
    {
      auto const& attr = attributes_[a];
      if ( attr.name.empty() )
        throw schema_error( "attribute with empty name" );
      if ( !attribute_index_.emplace( attr.name, a ).second )
        throw schema_error( "duplicate attribute '" + attr.name + "'" );
      if ( attr.values.empty() )
        throw schema_error( "attribute '" + attr.name + "' has an empty domain" );
      if ( attr.values.size() > domain_bound )
        throw schema_error( "attribute '" + attr.name + "' has " + std::to_string( attr.values.size() ) +
                            " values, above the bound of " + std::to_string( domain_bound ) );
      for ( std::size_t v = 0; v < attr.values.size(); ++v )
        if ( !value_index_[a].emplace( attr.values[v], v ).second )
          throw schema_error( "duplicate value '" + attr.values[v] + "' in domain of '" + attr.name + "'" );
    }
    for ( std::size_t c = 0; c < classes_.size(); ++c )
    {
      if ( classes_[c].empty() )
        throw schema_error( "class with empty name" );
      if ( !class_index_.emplace( classes_[c], c ).second )
        throw schema_error( "duplicate class '" + classes_[c] + "'" );
    }
  }

  std::vector<attribute> const& attributes() const noexcept { return attributes_; }
  std::vector<std::string> const& classes() const noexcept { return classes_; }

  std::size_t num_attributes() const noexcept { return attributes_.size(); }
  std::size_t num_classes() const noexcept { return classes_.size(); }

  attribute const& attribute_at( std::size_t a ) const { return attributes_.at( a ); }
  std::string const& class_name( std::size_t c ) const { return classes_.at( c ); }
  std::size_t domain_size( std::size_t a ) const { return attributes_.at( a ).values.size(); }

  std::optional<std::size_t> find_attribute( std::string_view name ) const
  {
    auto it = attribute_index_.find( std::string( name ) );
    return it == attribute_index_.end() ? std::nullopt : std::optional{ it->second };
  }

  std::optional<std::size_t> find_class( std::string_view name ) const
  {
    auto it = class_index_.find( std::string( name ) );
    return it == class_index_.end() ? std::nullopt : std::optional{ it->second };
  }

  std::optional<std::size_t> find_value( std::size_t a, std::string_view value ) const
  {
    auto const& index = value_index_.at( a );
    auto it = index.find( std::string( value ) );
    return it == index.end() ? std::nullopt : std::optional{ it->second };
  }

  /*! \brief Throws `schema_mismatch` for unknown names. */
  std::size_t attribute_index( std::string_view name ) const
  {
    if ( auto a = find_attribute( name ) )
      return *a;
    throw schema_mismatch( "unknown attribute '" + std::string( name ) + "'" );
  }

  std::size_t class_index( std::string_view name ) const
  {
    if ( auto c = find_class( name ) )
      return *c;
    throw schema_mismatch( "unknown class '" + std::string( name ) + "'" );
  }

  value_set full_domain( std::size_t a ) const { return value_set::full( domain_size( a ) ); }

  /*! \brief |D_1| * ... * |D_Q|, saturated at UINT64_MAX. */
  std::uint64_t space_size() const noexcept
  {
    std::uint64_t n = 1;
    for ( auto const& attr : attributes_ )
    {
      auto const d = static_cast<std::uint64_t>( attr.values.size() );
      if ( n > std::numeric_limits<std::uint64_t>::max() / d )
        return std::numeric_limits<std::uint64_t>::max();
      n *= d;
    }
    return n;
  }

  friend bool operator==( schema const& a, schema const& b )
  {
    return a.attributes_ == b.attributes_ && a.classes_ == b.classes_;
  }

private:
  std::vector<attribute> attributes_;
  std::vector<std::string> classes_;
  std::unordered_map<std::string, std::size_t> attribute_index_;
  std::unordered_map<std::string, std::size_t> class_index_;
  std::vector<std::unordered_map<std::string, std::size_t>> value_index_;
};

using schema_ptr = std::shared_ptr<schema const>;

inline bool same_schema( schema const& a, schema const& b )
{
  return &a == &b || a == b;
}

/*! \brief An assignment rule: a conjunction of elementary conditions concluding one class.
 *
 * `conditions` maps attribute indices to the accepted value set; iteration
 * order is schema attribute order.
 */
struct rule
{
  std::string id;
  std::size_t class_id = 0;
  std::map<std::size_t, value_set> conditions;

  std::size_t size() const noexcept { return conditions.size(); }
  bool constrains( std::size_t a ) const { return conditions.count( a ) != 0u; }

  friend bool operator==( rule const&, rule const& ) = default;
};

/*! \brief Value index per attribute, in schema order. */
using description = std::vector<std::size_t>;

inline void validate_rule( rule const& r, schema const& s )
{
  if ( r.class_id >= s.num_classes() )
    throw schema_mismatch( "rule '" + r.id + "' concludes an unknown class" );
  if ( r.conditions.empty() )
    throw rule_error( "rule '" + r.id + "' has no conditions" );
  for ( auto const& [a, values] : r.conditions )
  {
    if ( a >= s.num_attributes() )
      throw schema_mismatch( "rule '" + r.id + "' constrains an unknown attribute" );
    if ( values.universe() != s.domain_size( a ) )
      throw schema_mismatch( "rule '" + r.id + "': value set of '" + s.attribute_at( a ).name +
                             "' does not match the attribute domain" );
    if ( values.empty() )
      throw rule_error( "rule '" + r.id + "': empty value set for '" + s.attribute_at( a ).name + "'" );
  }
}

/*! \brief Accepted values of attribute `a` under rule `r` (full domain when unconstrained). */
inline value_set effective_constraint( rule const& r, std::size_t a, schema const& s )
{
  if ( a >= s.num_attributes() )
    throw schema_mismatch( "attribute index " + std::to_string( a ) + " is not in the schema" );
  if ( auto it = r.conditions.find( a ); it != r.conditions.end() )
    return it->second;
  return s.full_domain( a );
}

inline value_set effective_constraint( rule const& r, std::string_view attribute, schema const& s )
{
  return effective_constraint( r, s.attribute_index( attribute ), s );
}

inline void check_description( description const& d, schema const& s )
{
  if ( d.size() != s.num_attributes() )
    throw schema_mismatch( "object has " + std::to_string( d.size() ) + " values, schema has " +
                           std::to_string( s.num_attributes() ) + " attributes" );
  for ( std::size_t a = 0; a < d.size(); ++a )
    if ( d[a] >= s.domain_size( a ) )
      throw schema_mismatch( "value index out of the domain of '" + s.attribute_at( a ).name + "'" );
}

/*! \brief Does object description `d` satisfy every condition of `r`? */
inline bool matches( rule const& r, description const& d, schema const& s )
{
  check_description( d, s );
  for ( auto const& [a, values] : r.conditions )
  {
    if ( a >= d.size() )
      throw schema_mismatch( "rule '" + r.id + "' constrains an unknown attribute" );
    if ( !values.contains( d[a] ) )
      return false;
  }
  return true;
}

/*! \brief Same as `matches` without validating `d`; for inner enumeration loops. */
inline bool matches_unchecked( rule const& r, description const& d ) noexcept
{
  for ( auto const& [a, values] : r.conditions )
    if ( !values.contains( d[a] ) )
      return false;
  return true;
}

/*! \brief True iff some description of the full space satisfies both rules.
 *
 * Conditions are per-attribute, so the conjunction is satisfiable exactly
 * when every attribute's effective constraints intersect. Only attributes
 * constrained by both rules can have an empty intersection.
 */
inline bool overlaps( rule const& a, rule const& b, schema const& s )
{
  validate_rule( a, s );
  validate_rule( b, s );
  for ( auto const& [attr, values] : a.conditions )
    if ( auto it = b.conditions.find( attr ); it != b.conditions.end() && !values.intersects( it->second ) )
      return false;
  return true;
}

inline bool exclusive( rule const& a, rule const& b, schema const& s )
{
  return !overlaps( a, b, s );
}

/*! \brief `a` matches every description that `b` matches. Requires equal class labels. */
inline bool subsumes( rule const& a, rule const& b, schema const& s )
{
  if ( a.class_id != b.class_id )
    throw domain_error( "subsumption is only defined between rules of the same class ('" + a.id + "', '" + b.id + "')" );
  validate_rule( a, s );
  validate_rule( b, s );
  for ( auto const& [attr, values] : a.conditions )
  {
    auto it = b.conditions.find( attr );
    if ( it == b.conditions.end() )
    {
      if ( !values.is_full() )
        return false;
    }
    else if ( !it->second.is_subset_of( values ) )
      return false;
  }
  return true;
}

/*! \brief Copy of `r` with the condition on attribute `a` removed. */
inline rule without_condition( rule r, std::size_t a )
{
  r.conditions.erase( a );
  return r;
}

/*! \brief Ordered list of assignment rules over one schema. */
class rule_system
{
public:
  rule_system( schema_ptr s, std::vector<rule> rules )
      : schema_( std::move( s ) ), rules_( std::move( rules ) )
  {
    if ( !schema_ )
      throw usage_error( "rule system without schema" );
    std::set<std::string> ids;
    for ( auto const& r : rules_ )
    {
      if ( r.id.empty() )
        throw rule_error( "rule without id" );
      if ( !ids.insert( r.id ).second )
        throw rule_error( "duplicate rule id '" + r.id + "'" );
      validate_rule( r, *schema_ );
    }
  }

  schema const& get_schema() const noexcept { return *schema_; }
  schema_ptr const& shared_schema() const noexcept { return schema_; }
  std::vector<rule> const& rules() const noexcept { return rules_; }
  std::size_t size() const noexcept { return rules_.size(); }
  rule const& operator[]( std::size_t i ) const { return rules_[i]; }

  std::optional<std::size_t> find( std::string_view id ) const
  {
    for ( std::size_t i = 0; i < rules_.size(); ++i )
      if ( rules_[i].id == id )
        return i;
    return std::nullopt;
  }

  /*! \brief Indices of the rules forming the overall rule of class `c`. */
  std::vector<std::size_t> rules_of_class( std::size_t c ) const
  {
    std::vector<std::size_t> out;
    for ( std::size_t i = 0; i < rules_.size(); ++i )
      if ( rules_[i].class_id == c )
        out.push_back( i );
    return out;
  }

  /*! \brief Classes without any rule; permitted but reported. */
  std::vector<std::string> warnings() const
  {
    std::vector<std::string> out;
    for ( std::size_t c = 0; c < schema_->num_classes(); ++c )
      if ( rules_of_class( c ).empty() )
        out.push_back( "class '" + schema_->class_name( c ) + "' has no rules" );
    return out;
  }

  /*! \brief Structural equality: same schema content and same rules in the same order. */
  friend bool operator==( rule_system const& a, rule_system const& b )
  {
    return same_schema( *a.schema_, *b.schema_ ) && a.rules_ == b.rules_;
  }

private:
  schema_ptr schema_;
  std::vector<rule> rules_;
};

/*! \brief A labeled object: total description plus true class. */
struct data_object
{
  description values;
  std::size_t label = 0;

  friend bool operator==( data_object const&, data_object const& ) = default;
};

class dataset
{
public:
  dataset( schema_ptr s, std::vector<data_object> rows )
      : schema_( std::move( s ) ), rows_( std::move( rows ) )
  {
    if ( !schema_ )
      throw usage_error( "dataset without schema" );
    for ( auto const& row : rows_ )
    {
      check_description( row.values, *schema_ );
      if ( row.label >= schema_->num_classes() )
        throw schema_mismatch( "row label outside the schema classes" );
    }
  }

  schema const& get_schema() const noexcept { return *schema_; }
  schema_ptr const& shared_schema() const noexcept { return schema_; }
  std::vector<data_object> const& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

private:
  schema_ptr schema_;
  std::vector<data_object> rows_;
};

inline bool matches( rule const& r, data_object const& o, schema const& s )
{
  return matches( r, o.values, s );
}

/*! \brief Calls `fn(description const&)` for every element of D, in lexicographic order.
 *
 * Throws `size_error` naming the product size when it exceeds `limit`.
 */
template<typename Fn>
void for_each_description( schema const& s, std::uint64_t limit, Fn&& fn )
{
  auto const total = s.space_size();
  if ( total > limit )
    throw size_error( "description space has " +
                      ( total == std::numeric_limits<std::uint64_t>::max() ? std::string( "more than 2^64" )
                                                                             : std::to_string( total ) ) +
                      " elements, above the limit of " + std::to_string( limit ) );
  description d( s.num_attributes(), 0u );
  for ( std::uint64_t n = 0; n < total; ++n )
  {
    fn( std::as_const( d ) );
    for ( std::size_t a = d.size(); a-- > 0; )
    {
      if ( ++d[a] < s.domain_size( a ) )
        break;
      d[a] = 0;
    }
  }
}

} // namespace rulesys
