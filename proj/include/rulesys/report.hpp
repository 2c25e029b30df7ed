/*!
  \file report.hpp
  \brief Interchange (JSON) and plain-text renderings of metrics, reduction logs and verification reports

  Every document carries `format_version` and `kind`. Keys are emitted in a
  fixed order.
*/

#pragma once

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eval.hpp"
#include "reduce.hpp"
#include "textio.hpp"

namespace rulesys
{

using ordered_json = nlohmann::ordered_json;

inline std::string fixed4( double v )
{
  char buf[32];
  std::snprintf( buf, sizeof buf, "%.4f", v );
  return buf;
}

inline ordered_json to_json( rational r )
{
  return { { "num", r.num }, { "den", r.den }, { "value", fixed4( r.value() ) } };
}

inline ordered_json metrics_to_json( metrics const& m, policy p, std::optional<space_summary> const& space = std::nullopt )
{
  ordered_json fires = ordered_json::array();
  for ( auto const& [id, n] : m.per_rule_fire_counts )
    fires.push_back( { { "id", id }, { "count", n } } );
  ordered_json doc = { { "format_version", interchange_format_version },
                       { "kind", "metrics" },
                       { "policy", to_string( p ) },
                       { "rows", m.rows },
                       { "covered", m.covered },
                       { "correct", m.correct },
                       { "conflict_rows", m.conflict_rows },
                       { "accuracy", to_json( m.accuracy() ) },
                       { "coverage", to_json( m.coverage() ) },
                       { "accuracy_on_covered", to_json( m.accuracy_on_covered() ) },
                       { "rule_count", m.rule_count },
                       { "condition_count", m.condition_count },
                       { "per_rule_fire_counts", fires } };
  if ( space )
    doc["space"] = { { "descriptions", space->total },
                     { "covered", space->covered },
                     { "conflicting", space->conflicting },
                     { "coverage", to_json( space->coverage() ) } };
  return doc;
}

inline std::string fraction_text( rational r )
{
  return r.str() + " (" + fixed4( r.value() ) + ")";
}

inline std::string metrics_table( metrics const& m, policy p, std::optional<space_summary> const& space = std::nullopt )
{
  std::ostringstream os;
  auto row = [&]( std::string const& key, std::string const& value ) {
    os << key << std::string( key.size() < 22 ? 22 - key.size() : 1, ' ' ) << value << "\n";
  };
  row( "policy", to_string( p ) );
  row( "rows", std::to_string( m.rows ) );
  row( "accuracy", fraction_text( m.accuracy() ) );
  row( "coverage", fraction_text( m.coverage() ) );
  row( "accuracy_on_covered", fraction_text( m.accuracy_on_covered() ) );
  row( "conflict_rows", std::to_string( m.conflict_rows ) );
  row( "rule_count", std::to_string( m.rule_count ) );
  row( "condition_count", std::to_string( m.condition_count ) );
  if ( space )
  {
    row( "space_coverage", fraction_text( space->coverage() ) );
    row( "space_conflicting", std::to_string( space->conflicting ) );
  }
  os << "fires:";
  for ( auto const& [id, n] : m.per_rule_fire_counts )
    os << " " << id << "=" << n;
  os << "\n";
  return os.str();
}

inline ordered_json log_to_json( reduction_log const& log, guard_mode guard )
{
  ordered_json events = ordered_json::array();
  for ( auto const& ev : log.events )
  {
    ordered_json e = { { "rule", ev.rule_id },
                       { "attribute", ev.attribute },
                       { "decision", ev.outcome == decision::removed ? "removed" : "blocked" } };
    if ( ev.outcome == decision::blocked )
      e["reason"] = to_string( ev.reason );
    if ( ev.reason == block_reason::opposing_overlap )
      e["blocking_rule"] = ev.blocking_rule;
    if ( ev.guard )
      e["guard"] = { { "accuracy_before", to_json( ev.guard->before ) },
                     { "accuracy_after", to_json( ev.guard->after ) },
                     { "passed", ev.guard->passed } };
    if ( ev.proof )
      e["exclusivity_proof"] = { { "descriptions", ev.proof->descriptions },
                                 { "opposing_rules", ev.proof->opposing_rules },
                                 { "shared_descriptions", ev.proof->shared } };
    events.push_back( std::move( e ) );
  }
  return { { "format_version", interchange_format_version },
           { "kind", "reduction_log" },
           { "guard", to_string( guard ) },
           { "summary", { { "removals", log.removals }, { "final_system_hash", hash_hex( log.final_hash ) } } },
           { "events", events } };
}

inline std::string log_table( reduction_log const& log )
{
  std::ostringstream os;
  for ( auto const& ev : log.events )
  {
    os << ev.rule_id << " drop " << ev.attribute << ": ";
    if ( ev.outcome == decision::removed )
    {
      os << "removed";
      if ( ev.proof )
        os << " (enumerated " << ev.proof->descriptions << " descriptions, " << ev.proof->shared << " shared with "
           << ev.proof->opposing_rules << " opposing rules)";
    }
    else
    {
      os << "blocked, " << to_string( ev.reason );
      if ( ev.reason == block_reason::opposing_overlap )
        os << " with " << ev.blocking_rule;
      if ( ev.guard )
        os << " (accuracy " << ev.guard->before.str() << " -> " << ev.guard->after.str() << ")";
    }
    os << "\n";
  }
  return os.str();
}

inline std::string describe( description const& d, schema const& s )
{
  std::string out;
  for ( std::size_t a = 0; a < d.size(); ++a )
    out += ( a ? " " : "" ) + s.attribute_at( a ).name + "=" + s.attribute_at( a ).values[d[a]];
  return out;
}

inline ordered_json verification_to_json( verification_report const& rep, schema const& s )
{
  auto opt = []( std::optional<rational> const& r ) { return r ? to_json( *r ) : ordered_json(); };
  ordered_json samples = ordered_json::array();
  for ( auto const& d : rep.sample_changes )
    samples.push_back( describe( d, s ) );
  ordered_json doc = { { "format_version", interchange_format_version },
                       { "kind", "verification_report" },
                       { "valid", rep.valid },
                       { "violated_clause", rep.violated ? ordered_json( to_string( *rep.violated ) ) : ordered_json() },
                       { "detail", rep.detail },
                       { "blocking_pair", rep.blocking_pair ? ordered_json::array( { rep.blocking_pair->first, rep.blocking_pair->second } )
                                                            : ordered_json() },
                       { "modified_rules", rep.modified_rules },
                       { "dropped_rules", rep.dropped_rules },
                       { "dataset_coverage_before", opt( rep.dataset_coverage_before ) },
                       { "dataset_coverage_after", opt( rep.dataset_coverage_after ) },
                       { "space_enumerated", rep.space_enumerated },
                       { "space_coverage_before", opt( rep.space_coverage_before ) },
                       { "space_coverage_after", opt( rep.space_coverage_after ) },
                       { "changed_descriptions", rep.changed_descriptions },
                       { "newly_covered", rep.newly_covered },
                       { "sample_changes", samples } };
  return doc;
}

inline std::string verification_table( verification_report const& rep, schema const& s )
{
  std::ostringstream os;
  os << "verdict: " << ( rep.valid ? "valid" : "invalid" ) << "\n";
  if ( rep.violated )
    os << "violated clause: " << to_string( *rep.violated ) << ": " << rep.detail << "\n";
  if ( rep.blocking_pair )
    os << "blocking pair: " << rep.blocking_pair->first << ", " << rep.blocking_pair->second << "\n";
  os << "modified rules: " << rep.modified_rules.size();
  for ( auto const& id : rep.modified_rules )
    os << " " << id;
  os << "\n";
  if ( !rep.dropped_rules.empty() )
  {
    os << "dropped rules: " << rep.dropped_rules.size();
    for ( auto const& id : rep.dropped_rules )
      os << " " << id;
    os << "\n";
  }
  if ( rep.dataset_coverage_before )
    os << "dataset coverage: " << fraction_text( *rep.dataset_coverage_before ) << " -> "
       << fraction_text( *rep.dataset_coverage_after ) << "\n";
  if ( rep.space_enumerated )
  {
    os << "space coverage: " << fraction_text( *rep.space_coverage_before ) << " -> " << fraction_text( *rep.space_coverage_after ) << "\n";
    os << "changed descriptions: " << rep.changed_descriptions << " (newly covered " << rep.newly_covered << ")\n";
    for ( auto const& d : rep.sample_changes )
      os << "  " << describe( d, s ) << "\n";
  }
  return os.str();
}

} // namespace rulesys
