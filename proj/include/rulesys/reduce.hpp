/*!
  \file reduce.hpp
  \brief Reducibility testing and reduction of rule systems

  An assignment rule can drop a set of elementary conditions exactly when the
  conditions it keeps are mutually exclusive with every rule concluding a
  different class: the relaxed rule then only reaches descriptions no
  opposing rule fires on, so no conflict is created and coverage only grows.

  `greedy_reduce` scans rules in declared order and, within a rule, its
  conditions in schema attribute order, dropping one condition at a time and
  checking the relaxed rule against the current (already reduced) versions of
  the opposing rules. `minimal_reductions_oracle` enumerates the whole subset
  lattice of one rule for cross-checking.
*/

#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "eval.hpp"
#include "model.hpp"

namespace rulesys
{

/*! \brief Attributes constrained by both rules of a different-class pair.
 *
 * Only these attributes can witness mutual exclusivity; an empty result
 * means the two rules necessarily overlap.
 */
inline std::vector<std::size_t> corollary_filter( rule const& candidate, rule const& other, schema const& s )
{
  if ( candidate.class_id == other.class_id )
    throw domain_error( "corollary filter needs rules of different classes ('" + candidate.id + "', '" + other.id + "')" );
  validate_rule( candidate, s );
  validate_rule( other, s );
  std::vector<std::size_t> shared;
  for ( auto const& [a, values] : candidate.conditions )
    if ( other.constrains( a ) )
      shared.push_back( a );
  return shared;
}

/*! \brief First attribute (in schema order) on which `a` and `b` accept disjoint values, if any. */
inline std::optional<std::size_t> exclusivity_witness( rule const& a, rule const& b )
{
  for ( auto const& [attr, values] : a.conditions )
    if ( auto it = b.conditions.find( attr ); it != b.conditions.end() && !values.intersects( it->second ) )
      return attr;
  return std::nullopt;
}

/*! \brief Attributes whose condition alone can be dropped from `r` without overlapping a different-class rule of `sys`.
 *
 * A rule's last condition is never removable.
 */
inline std::vector<std::size_t> reducible_conditions( rule const& r, rule_system const& sys )
{
  auto const& s = sys.get_schema();
  validate_rule( r, s );
  if ( !sys.find( r.id ) )
    throw domain_error( "rule '" + r.id + "' is not part of the system" );
  std::vector<std::size_t> out;
  if ( r.size() < 2u )
    return out;
  for ( auto const& [a, values] : r.conditions )
  {
    auto const candidate = without_condition( r, a );
    bool ok = true;
    for ( auto const& other : sys.rules() )
    {
      if ( other.class_id == r.class_id )
        continue;
      if ( corollary_filter( candidate, other, s ).empty() || !exclusivity_witness( candidate, other ) )
      {
        ok = false;
        break;
      }
    }
    if ( ok )
      out.push_back( a );
  }
  return out;
}

enum class guard_mode
{
  rules, /*!< only rule-vs-rule exclusivity decides */
  data   /*!< additionally refuse removals that lower strict accuracy on a dataset */
};

inline char const* to_string( guard_mode g )
{
  return g == guard_mode::rules ? "rules" : "data";
}

enum class decision
{
  removed,
  blocked
};

enum class block_reason
{
  none,
  opposing_overlap,
  last_condition,
  data_guard
};

inline char const* to_string( block_reason r )
{
  switch ( r )
  {
  case block_reason::opposing_overlap:
    return "opposing-overlap";
  case block_reason::last_condition:
    return "last-condition";
  case block_reason::data_guard:
    return "data-guard";
  default:
    return "none";
  }
}

/*! \brief Strict accuracy on the guard dataset before and after a candidate removal. */
struct guard_check
{
  rational before;
  rational after;
  bool passed = true;
};

/*! \brief Brute-force confirmation that an accepted removal left no shared description. */
struct exclusivity_proof
{
  std::uint64_t descriptions = 0;   /*!< size of the enumerated space */
  std::size_t opposing_rules = 0;   /*!< different-class rules checked against */
  std::uint64_t shared = 0;         /*!< descriptions matched by the relaxed rule and an opposing rule */
};

struct reduction_event
{
  std::string rule_id;
  std::string attribute;
  decision outcome = decision::blocked;
  block_reason reason = block_reason::none;
  std::string blocking_rule; /*!< set when reason == opposing_overlap */
  std::optional<guard_check> guard;
  std::optional<exclusivity_proof> proof;
};

struct reduction_log
{
  std::vector<reduction_event> events;
  std::size_t removals = 0;
  std::uint64_t final_hash = 0;
};

struct reduce_options
{
  guard_mode guard = guard_mode::rules;
  dataset const* data = nullptr;
  bool prove = false; /*!< enumerate D to confirm every accepted removal */
  std::uint64_t space_limit = default_space_limit;
};

struct reduction_result
{
  rule_system system;
  reduction_log log;
};

/*! \brief FNV-1a over a canonical encoding of the rules (ids, classes, attribute names, value indices). */
inline std::uint64_t system_hash( rule_system const& sys )
{
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&]( std::string_view bytes ) {
    for ( unsigned char c : bytes )
    {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xffu;
    h *= 1099511628211ull;
  };
  auto const& s = sys.get_schema();
  for ( auto const& r : sys.rules() )
  {
    mix( r.id );
    mix( s.class_name( r.class_id ) );
    for ( auto const& [a, values] : r.conditions )
    {
      mix( s.attribute_at( a ).name );
      for ( auto m : values.members() )
        mix( std::to_string( m ) );
    }
    mix( "|" );
  }
  return h;
}

inline std::string hash_hex( std::uint64_t h )
{
  std::ostringstream os;
  os << std::hex;
  os.width( 16 );
  os.fill( '0' );
  os << h;
  return os.str();
}

namespace detail
{

inline std::size_t strict_correct( std::vector<rule> const& rules, dataset const& data )
{
  std::size_t correct = 0;
  for ( auto const& row : data.rows() )
  {
    bool fired = false, wrong = false;
    for ( auto const& r : rules )
      if ( matches_unchecked( r, row.values ) )
      {
        fired = true;
        if ( r.class_id != row.label )
        {
          wrong = true;
          break;
        }
      }
    if ( fired && !wrong )
      ++correct;
  }
  return correct;
}

inline exclusivity_proof prove_exclusive( rule const& relaxed, std::vector<rule> const& live, schema const& s, std::uint64_t limit )
{
  exclusivity_proof proof;
  std::vector<rule const*> opposing;
  for ( auto const& o : live )
    if ( o.class_id != relaxed.class_id )
      opposing.push_back( &o );
  proof.opposing_rules = opposing.size();
  for_each_description( s, limit, [&]( description const& d ) {
    ++proof.descriptions;
    if ( !matches_unchecked( relaxed, d ) )
      return;
    for ( auto const* o : opposing )
      if ( matches_unchecked( *o, d ) )
      {
        ++proof.shared;
        return;
      }
  } );
  return proof;
}

} // namespace detail

/*! \brief Greedy single-condition reduction of every rule.
 *
 * Deterministic: rules in declared order, conditions in schema attribute
 * order, each candidate checked against the live versions of all
 * different-class rules.
 */
inline reduction_result greedy_reduce( rule_system const& sys, reduce_options const& options = {} )
{
  auto const& s = sys.get_schema();
  if ( options.guard == guard_mode::data )
  {
    if ( options.data == nullptr )
      throw usage_error( "guard=data requires a dataset" );
    if ( !same_schema( s, options.data->get_schema() ) )
      throw schema_mismatch( "guard dataset uses a different schema" );
    if ( options.data->empty() )
      throw usage_error( "guard dataset is empty" );
  }

  std::vector<rule> live = sys.rules();
  reduction_log log;
  std::size_t current_correct = options.guard == guard_mode::data ? detail::strict_correct( live, *options.data ) : 0u;
  bool const can_prove = options.prove && s.space_size() <= options.space_limit;

  for ( std::size_t i = 0; i < live.size(); ++i )
  {
    std::vector<std::size_t> attrs;
    for ( auto const& [a, values] : live[i].conditions )
      attrs.push_back( a );

    for ( auto a : attrs )
    {
      reduction_event ev;
      ev.rule_id = live[i].id;
      ev.attribute = s.attribute_at( a ).name;

      if ( live[i].size() == 1u )
      {
        ev.reason = block_reason::last_condition;
        log.events.push_back( std::move( ev ) );
        continue;
      }

      auto candidate = without_condition( live[i], a );
      for ( auto const& other : live )
      {
        if ( other.class_id == candidate.class_id )
          continue;
        if ( !exclusivity_witness( candidate, other ) )
        {
          ev.reason = block_reason::opposing_overlap;
          ev.blocking_rule = other.id;
          break;
        }
      }
      if ( ev.reason != block_reason::none )
      {
        log.events.push_back( std::move( ev ) );
        continue;
      }

      if ( options.guard == guard_mode::data )
      {
        auto trial = live;
        trial[i] = candidate;
        auto const trial_correct = detail::strict_correct( trial, *options.data );
        auto const n = options.data->size();
        ev.guard = guard_check{ { current_correct, n }, { trial_correct, n }, trial_correct >= current_correct };
        if ( !ev.guard->passed )
        {
          ev.reason = block_reason::data_guard;
          log.events.push_back( std::move( ev ) );
          continue;
        }
        current_correct = trial_correct;
      }

      live[i] = std::move( candidate );
      ev.outcome = decision::removed;
      if ( can_prove )
      {
        ev.proof = detail::prove_exclusive( live[i], live, s, options.space_limit );
        if ( ev.proof->shared != 0u )
          throw std::logic_error( "accepted removal of '" + ev.attribute + "' from '" + ev.rule_id +
                                  "' overlaps an opposing rule on enumeration" );
      }
      ++log.removals;
      log.events.push_back( std::move( ev ) );
    }
  }

  rule_system reduced( sys.shared_schema(), std::move( live ) );
  log.final_hash = system_hash( reduced );
  return { std::move( reduced ), std::move( log ) };
}

/*! \brief Applies the removals recorded in `log` to `original`. */
inline rule_system replay( rule_system const& original, reduction_log const& log )
{
  auto rules = original.rules();
  auto const& s = original.get_schema();
  for ( auto const& ev : log.events )
  {
    if ( ev.outcome != decision::removed )
      continue;
    auto i = original.find( ev.rule_id );
    if ( !i )
      throw domain_error( "log refers to unknown rule '" + ev.rule_id + "'" );
    rules[*i].conditions.erase( s.attribute_index( ev.attribute ) );
  }
  return rule_system( original.shared_schema(), std::move( rules ) );
}

struct oracle_limits
{
  std::size_t max_conditions = 20;
  std::size_t max_opposing_rules = 100'000;
};

/*! \brief All subset-minimal non-empty sets of `r`'s conditions that are
 * exclusive with every different-class rule of `sys`, by exhaustive search.
 *
 * Each set is a sorted list of attribute indices. Sets are listed by size,
 * then lexicographically by bit pattern. The full condition set appears when
 * it is exclusive but no strict subset is; the list is empty when `r`
 * already overlaps an opposing rule.
 */
inline std::vector<std::vector<std::size_t>> minimal_reductions_oracle( rule const& r, rule_system const& sys,
                                                                        oracle_limits const& limits = {} )
{
  auto const& s = sys.get_schema();
  validate_rule( r, s );
  auto const k = r.size();
  if ( k > limits.max_conditions || k > 30u )
    throw size_error( "rule '" + r.id + "' has " + std::to_string( k ) + " conditions, above the oracle limit of " +
                      std::to_string( std::min<std::size_t>( limits.max_conditions, 30u ) ) );

  std::vector<std::size_t> attrs;
  std::vector<value_set const*> sets;
  for ( auto const& [a, values] : r.conditions )
  {
    attrs.push_back( a );
    sets.push_back( &values );
  }

  /* for each opposing rule, the positions whose condition alone separates it from r */
  std::vector<std::uint32_t> separators;
  for ( auto const& o : sys.rules() )
  {
    if ( o.class_id == r.class_id )
      continue;
    std::uint32_t mask = 0;
    for ( std::size_t p = 0; p < k; ++p )
      if ( auto it = o.conditions.find( attrs[p] ); it != o.conditions.end() && !sets[p]->intersects( it->second ) )
        mask |= std::uint32_t{ 1 } << p;
    separators.push_back( mask );
  }
  if ( separators.size() > limits.max_opposing_rules )
    throw size_error( "system has " + std::to_string( separators.size() ) + " opposing rules, above the oracle limit of " +
                      std::to_string( limits.max_opposing_rules ) );

  auto exclusive_set = [&]( std::uint32_t kept ) {
    return std::all_of( separators.begin(), separators.end(), [&]( auto sep ) { return ( sep & kept ) != 0u; } );
  };

  std::vector<std::uint32_t> masks;
  for ( std::uint32_t m = 1; m < ( std::uint32_t{ 1 } << k ); ++m )
    masks.push_back( m );
  std::stable_sort( masks.begin(), masks.end(), []( auto x, auto y ) { return std::popcount( x ) < std::popcount( y ); } );

  std::vector<std::uint32_t> minimal;
  for ( auto m : masks )
  {
    bool const above_minimal = std::any_of( minimal.begin(), minimal.end(), [&]( auto f ) { return ( f & m ) == f; } );
    if ( !above_minimal && exclusive_set( m ) )
      minimal.push_back( m );
  }

  std::vector<std::vector<std::size_t>> out;
  for ( auto m : minimal )
  {
    std::vector<std::size_t> kept;
    for ( std::size_t p = 0; p < k; ++p )
      if ( m & ( std::uint32_t{ 1 } << p ) )
        kept.push_back( attrs[p] );
    out.push_back( std::move( kept ) );
  }
  return out;
}

/*! \brief Pairs (removed rule id, subsuming rule id) that `subsumption_prune` would drop. */
inline std::vector<std::pair<std::string, std::string>> subsumed_rules( rule_system const& sys )
{
  auto const& s = sys.get_schema();
  std::vector<std::pair<std::string, std::string>> out;
  for ( std::size_t i = 0; i < sys.size(); ++i )
    for ( std::size_t j = 0; j < sys.size(); ++j )
    {
      if ( i == j || sys[i].class_id != sys[j].class_id || !subsumes( sys[j], sys[i], s ) )
        continue;
      /* mutual subsumption: identical semantics, the earlier rule survives */
      if ( subsumes( sys[i], sys[j], s ) && i < j )
        continue;
      out.emplace_back( sys[i].id, sys[j].id );
      break;
    }
  return out;
}

/*! \brief Drops every rule subsumed by another rule of its class. Match behavior is unchanged. */
inline rule_system subsumption_prune( rule_system const& sys )
{
  auto const dropped = subsumed_rules( sys );
  std::vector<rule> kept;
  for ( auto const& r : sys.rules() )
    if ( std::none_of( dropped.begin(), dropped.end(), [&]( auto const& p ) { return p.first == r.id; } ) )
      kept.push_back( r );
  return rule_system( sys.shared_schema(), std::move( kept ) );
}

enum class verification_clause
{
  subset,      /*!< (a) every reduced rule keeps a subset of its original conditions */
  exclusivity, /*!< (b) modified rules are exclusive with all different-class rules */
  coverage,    /*!< (c) coverage does not decrease, on the dataset and on D */
  semantics    /*!< (d) no description loses a previously fired class */
};

inline char const* to_string( verification_clause c )
{
  switch ( c )
  {
  case verification_clause::subset:
    return "subset";
  case verification_clause::exclusivity:
    return "exclusivity";
  case verification_clause::coverage:
    return "coverage";
  default:
    return "semantics";
  }
}

struct verification_report
{
  bool valid = true;
  std::optional<verification_clause> violated;
  std::string detail;
  std::optional<std::pair<std::string, std::string>> blocking_pair;

  std::vector<std::string> modified_rules;
  std::vector<std::string> dropped_rules; /*!< present in the original only, e.g. after pruning */

  std::optional<rational> dataset_coverage_before;
  std::optional<rational> dataset_coverage_after;

  bool space_enumerated = false;
  std::optional<rational> space_coverage_before;
  std::optional<rational> space_coverage_after;
  std::uint64_t changed_descriptions = 0;
  std::uint64_t newly_covered = 0;
  std::vector<description> sample_changes; /*!< first few descriptions whose fired-class set changed */
};

inline constexpr std::size_t max_sample_changes = 10;

/*! \brief Checks that `reduced` is a valid reduction of `original`.
 *
 * Rules are matched by id; every id in `reduced` must exist in `original`.
 * The report names the first violated clause.
 */
inline verification_report verify_reduction( rule_system const& original, rule_system const& reduced,
                                             dataset const* data = nullptr, std::uint64_t space_limit = default_space_limit )
{
  auto const& s = original.get_schema();
  if ( !same_schema( s, reduced.get_schema() ) )
    throw schema_mismatch( "original and reduced systems use different schemas" );
  if ( data && !same_schema( s, data->get_schema() ) )
    throw schema_mismatch( "dataset uses a different schema" );

  verification_report rep;
  auto violate = [&]( verification_clause c, std::string detail ) {
    if ( rep.valid )
    {
      rep.valid = false;
      rep.violated = c;
      rep.detail = std::move( detail );
    }
  };

  std::vector<bool> modified( reduced.size(), false );
  for ( std::size_t i = 0; i < reduced.size(); ++i )
  {
    auto const& r = reduced[i];
    auto o = original.find( r.id );
    if ( !o )
      throw rule_error( "reduced rule '" + r.id + "' does not exist in the original system" );
    auto const& orig = original[*o];
    if ( r == orig )
      continue;
    modified[i] = true;
    rep.modified_rules.push_back( r.id );
    if ( r.class_id != orig.class_id )
    {
      violate( verification_clause::subset, "rule '" + r.id + "' changed its class" );
      continue;
    }
    for ( auto const& [a, values] : r.conditions )
    {
      auto it = orig.conditions.find( a );
      if ( it == orig.conditions.end() || it->second != values )
      {
        violate( verification_clause::subset,
                 "rule '" + r.id + "' has a condition on '" + s.attribute_at( a ).name + "' not present in the original" );
        break;
      }
    }
  }
  for ( auto const& r : original.rules() )
    if ( !reduced.find( r.id ) )
      rep.dropped_rules.push_back( r.id );

  for ( std::size_t i = 0; i < reduced.size() && rep.valid; ++i )
  {
    if ( !modified[i] )
      continue;
    for ( auto const& other : reduced.rules() )
      if ( other.class_id != reduced[i].class_id && overlaps( reduced[i], other, s ) )
      {
        rep.blocking_pair = { reduced[i].id, other.id };
        violate( verification_clause::exclusivity,
                 "modified rule '" + reduced[i].id + "' overlaps rule '" + other.id + "' of a different class" );
        break;
      }
  }

  if ( data )
  {
    rep.dataset_coverage_before = evaluate( original, *data ).summary.coverage();
    rep.dataset_coverage_after = evaluate( reduced, *data ).summary.coverage();
    if ( *rep.dataset_coverage_after < *rep.dataset_coverage_before )
      violate( verification_clause::coverage, "dataset coverage decreased from " + rep.dataset_coverage_before->str() +
                                                  " to " + rep.dataset_coverage_after->str() );
  }

  if ( s.space_size() <= space_limit )
  {
    rep.space_enumerated = true;
    std::uint64_t total = 0, covered_before = 0, covered_after = 0;
    std::optional<std::string> lost;
    for_each_description( s, space_limit, [&]( description const& d ) {
      ++total;
      auto const before = fired_classes( original, d );
      auto const after = fired_classes( reduced, d );
      covered_before += before.empty() ? 0u : 1u;
      covered_after += after.empty() ? 0u : 1u;
      if ( before == after )
        return;
      ++rep.changed_descriptions;
      if ( before.empty() )
        ++rep.newly_covered;
      if ( rep.sample_changes.size() < max_sample_changes )
        rep.sample_changes.push_back( d );
      if ( !lost && !std::includes( after.begin(), after.end(), before.begin(), before.end() ) )
      {
        std::string desc;
        for ( std::size_t a = 0; a < d.size(); ++a )
          desc += ( a ? ", " : "" ) + s.attribute_at( a ).name + "=" + s.attribute_at( a ).values[d[a]];
        lost = "description (" + desc + ") lost a previously fired class";
      }
    } );
    rep.space_coverage_before = rational{ covered_before, total };
    rep.space_coverage_after = rational{ covered_after, total };
    if ( covered_after < covered_before )
      violate( verification_clause::coverage, "space coverage decreased from " + rep.space_coverage_before->str() +
                                                  " to " + rep.space_coverage_after->str() );
    if ( lost )
      violate( verification_clause::semantics, *lost );
  }
  return rep;
}

} // namespace rulesys
