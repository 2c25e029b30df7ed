/*!
  \file eval.hpp
  \brief Predictive accuracy, coverage and compactness of rule systems

  All counters are exact integers. Accuracy and coverage share the same
  denominator (every dataset row), so an uncovered row always counts as
  incorrect.
*/

#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace rulesys
{

/*! \brief How a row hit by rules of several classes is scored. */
enum class policy
{
  strict,     /*!< correct iff covered and every firing rule concludes the label */
  any_correct /*!< correct iff some firing rule concludes the label */
};

inline char const* to_string( policy p )
{
  return p == policy::strict ? "strict" : "any-correct";
}

/*! \brief Non-negative fraction kept as its exact counters (not reduced). */
struct rational
{
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const noexcept { return den == 0u ? 0.0 : static_cast<double>( num ) / static_cast<double>( den ); }

  std::string str() const { return std::to_string( num ) + "/" + std::to_string( den ); }

  /*! \brief Value equality (4/5 == 8/10). */
  friend bool operator==( rational a, rational b ) noexcept
  {
    return static_cast<unsigned __int128>( a.num ) * b.den == static_cast<unsigned __int128>( b.num ) * a.den;
  }

  friend bool operator<( rational a, rational b ) noexcept
  {
    return static_cast<unsigned __int128>( a.num ) * b.den < static_cast<unsigned __int128>( b.num ) * a.den;
  }

  friend bool operator<=( rational a, rational b ) noexcept { return !( b < a ); }
};

enum class verdict
{
  correct,
  misclassified,
  conflict,
  uncovered
};

inline char const* to_string( verdict v )
{
  switch ( v )
  {
  case verdict::correct:
    return "correct";
  case verdict::misclassified:
    return "misclassified";
  case verdict::conflict:
    return "conflict";
  default:
    return "uncovered";
  }
}

struct row_outcome
{
  std::vector<std::size_t> fired; /*!< indices of firing rules, in rule order */
  verdict result = verdict::uncovered;
};

struct metrics
{
  std::size_t rows = 0;
  std::size_t covered = 0;
  std::size_t correct = 0;
  std::size_t conflict_rows = 0; /*!< rows fired on by rules of two or more classes */
  std::size_t rule_count = 0;
  std::size_t condition_count = 0;
  std::vector<std::pair<std::string, std::size_t>> per_rule_fire_counts; /*!< in rule order */

  rational accuracy() const noexcept { return { correct, rows }; }
  rational coverage() const noexcept { return { covered, rows }; }
  rational accuracy_on_covered() const noexcept { return covered == 0u ? rational{ 0, 1 } : rational{ correct, covered }; }
};

struct evaluation
{
  metrics summary;
  std::vector<row_outcome> outcomes;
};

/*! \brief Sorted ids of the classes concluded by rules matching `d`. */
inline std::vector<std::size_t> fired_classes( rule_system const& sys, description const& d )
{
  std::vector<bool> hit( sys.get_schema().num_classes(), false );
  for ( auto const& r : sys.rules() )
    if ( matches_unchecked( r, d ) )
      hit[r.class_id] = true;
  std::vector<std::size_t> out;
  for ( std::size_t c = 0; c < hit.size(); ++c )
    if ( hit[c] )
      out.push_back( c );
  return out;
}

struct compactness_counts
{
  std::size_t rule_count = 0;
  std::size_t condition_count = 0;
  double mean_conditions_per_rule = 0.0;
};

inline compactness_counts compactness( rule_system const& sys )
{
  compactness_counts c;
  c.rule_count = sys.size();
  for ( auto const& r : sys.rules() )
    c.condition_count += r.size();
  c.mean_conditions_per_rule = c.rule_count == 0u ? 0.0 : static_cast<double>( c.condition_count ) / static_cast<double>( c.rule_count );
  return c;
}

inline evaluation evaluate( rule_system const& sys, dataset const& data, policy p = policy::strict )
{
  if ( !same_schema( sys.get_schema(), data.get_schema() ) )
    throw schema_mismatch( "rule system and dataset use different schemas" );
  if ( data.empty() )
    throw usage_error( "cannot evaluate on an empty dataset" );

  evaluation ev;
  auto& m = ev.summary;
  auto const counts = compactness( sys );
  m.rows = data.size();
  m.rule_count = counts.rule_count;
  m.condition_count = counts.condition_count;
  for ( auto const& r : sys.rules() )
    m.per_rule_fire_counts.emplace_back( r.id, 0u );

  ev.outcomes.reserve( data.size() );
  for ( auto const& row : data.rows() )
  {
    row_outcome out;
    bool any_label = false, any_other = false;
    std::size_t first_class = 0;
    bool multi_class = false;
    for ( std::size_t i = 0; i < sys.size(); ++i )
    {
      auto const& r = sys[i];
      if ( !matches_unchecked( r, row.values ) )
        continue;
      if ( out.fired.empty() )
        first_class = r.class_id;
      else if ( r.class_id != first_class )
        multi_class = true;
      out.fired.push_back( i );
      ++m.per_rule_fire_counts[i].second;
      ( r.class_id == row.label ? any_label : any_other ) = true;
    }

    if ( out.fired.empty() )
      out.result = verdict::uncovered;
    else
    {
      ++m.covered;
      if ( multi_class )
        ++m.conflict_rows;
      bool const ok = p == policy::strict ? !any_other : any_label;
      if ( ok )
        out.result = verdict::correct;
      else
        out.result = multi_class ? verdict::conflict : verdict::misclassified;
    }
    if ( out.result == verdict::correct )
      ++m.correct;
    ev.outcomes.push_back( std::move( out ) );
  }
  return ev;
}

inline constexpr std::uint64_t default_space_limit = 1'000'000;

struct space_summary
{
  std::uint64_t total = 0;
  std::uint64_t covered = 0;
  std::uint64_t conflicting = 0; /*!< descriptions fired on by two or more classes */

  rational coverage() const noexcept { return { covered, total }; }
};

/*! \brief Exact coverage and conflict counts over the full description space. */
inline space_summary summarize_space( rule_system const& sys, std::uint64_t limit = default_space_limit )
{
  space_summary out;
  auto const num_classes = sys.get_schema().num_classes();
  std::vector<char> hit( num_classes );
  for_each_description( sys.get_schema(), limit, [&]( description const& d ) {
    ++out.total;
    std::fill( hit.begin(), hit.end(), 0 );
    std::size_t classes = 0;
    for ( auto const& r : sys.rules() )
      if ( !hit[r.class_id] && matches_unchecked( r, d ) )
      {
        hit[r.class_id] = 1;
        ++classes;
      }
    if ( classes > 0u )
      ++out.covered;
    if ( classes > 1u )
      ++out.conflicting;
  } );
  return out;
}

/*! \brief Fraction of all descriptions in D matched by at least one rule. */
inline rational space_coverage( rule_system const& sys, std::uint64_t limit = default_space_limit )
{
  return summarize_space( sys, limit ).coverage();
}

/*! \brief Every unordered pair of different-class rules that can fire together, as (earlier id, later id). */
inline std::vector<std::pair<std::string, std::string>> conflict_pairs( rule_system const& sys )
{
  std::vector<std::pair<std::string, std::string>> out;
  for ( std::size_t i = 0; i < sys.size(); ++i )
    for ( std::size_t j = i + 1; j < sys.size(); ++j )
      if ( sys[i].class_id != sys[j].class_id && overlaps( sys[i], sys[j], sys.get_schema() ) )
        out.emplace_back( sys[i].id, sys[j].id );
  return out;
}

} // namespace rulesys
