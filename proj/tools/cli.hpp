/*!
  \file cli.hpp
  \brief The `rulesys` command-line front end

  Exit codes: 0 success / valid, 1 invariant violation or invalid reduction,
  2 parse error, 64 usage error. Reports go to stdout, diagnostics to stderr.
*/

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <rulesys/rulesys.hpp>

#ifndef RULESYS_DATA_DIR
#define RULESYS_DATA_DIR "data"
#endif

namespace rulesys::cli
{

enum exit_code : int
{
  exit_ok = 0,
  exit_invalid = 1,
  exit_parse = 2,
  exit_usage = 64
};

enum class output_format
{
  table,
  interchange,
  markdown
};

/*! \brief Options of one invocation. */
struct run_config
{
  std::string subcommand;
  std::string schema_path;
  std::string system_path;
  std::string original_path;
  std::string reduced_path;
  std::string dataset_path;
  std::string label_column = "class";
  std::vector<std::string> columns;
  std::string output_path;
  std::string log_path;
  std::string fixture;
  std::string data_dir = RULESYS_DATA_DIR;
  policy eval_policy = policy::strict;
  guard_mode guard = guard_mode::rules;
  bool space = false;
  bool prune = false;
  bool prove = true;
  std::uint64_t space_limit = default_space_limit;
  output_format format = output_format::table;
};

/*! \brief Thrown inside a subcommand to end it with a given exit code. */
struct exit_request
{
  int code;
};

namespace detail
{

inline std::string read_file( std::string const& path, std::ostream& err )
{
  std::ifstream in( path, std::ios::binary );
  if ( !in )
  {
    err << "error: cannot read '" << path << "'\n";
    throw exit_request{ exit_usage };
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file( std::string const& path, std::string const& content, std::ostream& err )
{
  std::ofstream out( path, std::ios::binary );
  if ( !out || !( out << content ) )
  {
    err << "error: cannot write '" << path << "'\n";
    throw exit_request{ exit_usage };
  }
}

template<typename T>
T unwrap( parse_result<T> result, std::string const& what, std::ostream& err )
{
  for ( auto const& d : result.diagnostics )
    err << what << ": " << d.to_string() << "\n";
  if ( !result.ok() )
    throw exit_request{ result.has_syntax_errors() ? exit_parse : exit_invalid };
  return std::move( *result.value );
}

inline bool looks_like_json( std::string const& text )
{
  auto p = text.find_first_not_of( " \t\r\n" );
  return p != std::string::npos && text[p] == '{';
}

inline std::optional<schema_ptr> load_schema( run_config const& cfg, std::ostream& err )
{
  if ( cfg.schema_path.empty() )
    return std::nullopt;
  return unwrap( parse_schema( read_file( cfg.schema_path, err ) ), cfg.schema_path, err );
}

inline rule_system load_system( std::string const& path, std::optional<schema_ptr> const& s, std::ostream& err )
{
  auto text = read_file( path, err );
  if ( looks_like_json( text ) )
  {
    auto sys = unwrap( parse_interchange_system( text ), path, err );
    if ( s && !same_schema( **s, sys.get_schema() ) )
    {
      err << path << ": error: embedded schema differs from the schema supplied separately\n";
      throw exit_request{ exit_invalid };
    }
    return s ? rule_system( *s, sys.rules() ) : sys;
  }
  return s ? unwrap( parse_system( text, *s ), path, err ) : unwrap( parse_system_document( text ), path, err );
}

inline dataset load_dataset( std::string const& path, schema_ptr const& s, run_config const& cfg, std::ostream& err )
{
  csv_options opts;
  opts.label_column = cfg.label_column;
  if ( !cfg.columns.empty() )
    opts.columns = cfg.columns;
  return unwrap( parse_dataset( read_file( path, err ), s, opts ), path, err );
}

inline std::string system_output( rule_system const& sys, std::string const& path )
{
  bool const json = path.size() >= 5 && path.compare( path.size() - 5, 5, ".json" ) == 0;
  return serialize_system( sys, json ? system_format::interchange : system_format::dsl );
}

inline std::string pct( rational r )
{
  char buf[32];
  std::snprintf( buf, sizeof buf, "%.1f%%", 100.0 * r.value() );
  return buf;
}

} // namespace detail

inline int cmd_validate( run_config const& cfg, std::ostream& out, std::ostream& err )
{
  auto s = detail::load_schema( cfg, err );
  auto sys = detail::load_system( cfg.system_path, s, err );
  auto const& sch = sys.get_schema();
  out << "valid: " << sys.size() << " rules, " << sch.num_attributes() << " attributes, " << sch.num_classes() << " classes\n";
  return exit_ok;
}

inline int cmd_evaluate( run_config const& cfg, std::ostream& out, std::ostream& err )
{
  auto s = detail::load_schema( cfg, err );
  auto sys = detail::load_system( cfg.system_path, s, err );
  auto data = detail::load_dataset( cfg.dataset_path, sys.shared_schema(), cfg, err );
  auto ev = evaluate( sys, data, cfg.eval_policy );
  std::optional<space_summary> space;
  if ( cfg.space )
    space = summarize_space( sys, cfg.space_limit );

  auto const& m = ev.summary;
  switch ( cfg.format )
  {
  case output_format::interchange:
    out << metrics_to_json( m, cfg.eval_policy, space ).dump( 2 ) << "\n";
    break;
  case output_format::markdown:
    out << "| metric | value |\n|---|---|\n";
    out << "| accuracy | " << m.accuracy().str() << " (" << detail::pct( m.accuracy() ) << ") |\n";
    out << "| coverage | " << m.coverage().str() << " (" << detail::pct( m.coverage() ) << ") |\n";
    out << "| accuracy on covered | " << m.accuracy_on_covered().str() << " |\n";
    out << "| conflict rows | " << m.conflict_rows << " |\n";
    out << "| rules | " << m.rule_count << " |\n";
    out << "| conditions | " << m.condition_count << " |\n";
    if ( space )
      out << "| space coverage | " << space->coverage().str() << " (" << detail::pct( space->coverage() ) << ") |\n";
    break;
  default:
    out << metrics_table( m, cfg.eval_policy, space );
  }
  return exit_ok;
}

inline int cmd_reduce( run_config const& cfg, std::ostream& out, std::ostream& err )
{
  if ( cfg.guard == guard_mode::data && cfg.dataset_path.empty() )
  {
    err << "error: --guard data requires --dataset\n";
    return exit_usage;
  }
  auto s = detail::load_schema( cfg, err );
  auto sys = detail::load_system( cfg.system_path, s, err );
  std::optional<dataset> data;
  if ( !cfg.dataset_path.empty() )
    data = detail::load_dataset( cfg.dataset_path, sys.shared_schema(), cfg, err );

  reduce_options opts;
  opts.guard = cfg.guard;
  opts.data = data ? &*data : nullptr;
  opts.prove = cfg.prove;
  opts.space_limit = cfg.space_limit;
  auto result = greedy_reduce( sys, opts );

  std::vector<std::pair<std::string, std::string>> pruned;
  rule_system final_system = result.system;
  if ( cfg.prune )
  {
    pruned = subsumed_rules( result.system );
    final_system = subsumption_prune( result.system );
  }

  if ( !cfg.output_path.empty() )
    detail::write_file( cfg.output_path, detail::system_output( final_system, cfg.output_path ), err );
  auto log_json = log_to_json( result.log, cfg.guard );
  if ( !cfg.log_path.empty() )
    detail::write_file( cfg.log_path, log_json.dump( 2 ) + "\n", err );

  if ( cfg.format == output_format::interchange )
  {
    ordered_json pruned_json = ordered_json::array();
    for ( auto const& [gone, by] : pruned )
      pruned_json.push_back( { { "rule", gone }, { "subsumed_by", by } } );
    ordered_json doc = { { "format_version", interchange_format_version },
                         { "kind", "reduction_report" },
                         { "removals", result.log.removals },
                         { "rules_before", sys.size() },
                         { "rules_after", final_system.size() },
                         { "pruned", pruned_json },
                         { "log", log_json } };
    if ( cfg.output_path.empty() )
      doc["system"] = system_to_json( final_system );
    out << doc.dump( 2 ) << "\n";
    return exit_ok;
  }

  out << "removals: " << result.log.removals << "\n";
  out << "rules: " << sys.size() << " -> " << final_system.size() << "\n";
  out << "conditions: " << compactness( sys ).condition_count << " -> " << compactness( final_system ).condition_count << "\n";
  out << "reduced system hash: " << hash_hex( result.log.final_hash ) << "\n";
  for ( auto const& [gone, by] : pruned )
    out << "pruned " << gone << " (subsumed by " << by << ")\n";
  out << "\n" << log_table( result.log );
  if ( cfg.output_path.empty() )
    out << "\n" << serialize_system( final_system );
  return exit_ok;
}

inline int cmd_verify( run_config const& cfg, std::ostream& out, std::ostream& err )
{
  auto s = detail::load_schema( cfg, err );
  auto original = detail::load_system( cfg.original_path, s, err );
  auto reduced = detail::load_system( cfg.reduced_path, original.shared_schema(), err );
  std::optional<dataset> data;
  if ( !cfg.dataset_path.empty() )
    data = detail::load_dataset( cfg.dataset_path, original.shared_schema(), cfg, err );

  auto rep = verify_reduction( original, reduced, data ? &*data : nullptr, cfg.space_limit );
  if ( cfg.format == output_format::interchange )
    out << verification_to_json( rep, original.get_schema() ).dump( 2 ) << "\n";
  else
    out << verification_table( rep, original.get_schema() );
  return rep.valid ? exit_ok : exit_invalid;
}

namespace detail
{

struct system_study
{
  std::string name;
  rule_system original;
  reduction_result reduced;
  space_summary space_before;
  space_summary space_after;
  std::optional<metrics> data_before;
  std::optional<metrics> data_after;
};

inline system_study study( std::string name, rule_system sys, dataset const* data, std::uint64_t limit )
{
  reduce_options opts;
  opts.prove = true;
  opts.space_limit = limit;
  auto red = greedy_reduce( sys, opts );
  system_study st{ std::move( name ), sys, red, summarize_space( sys, limit ), summarize_space( red.system, limit ), {}, {} };
  if ( data )
  {
    st.data_before = evaluate( sys, *data ).summary;
    st.data_after = evaluate( red.system, *data ).summary;
  }
  return st;
}

inline std::string removed_list( reduction_log const& log )
{
  std::string out;
  for ( auto const& ev : log.events )
    if ( ev.outcome == decision::removed )
      out += ( out.empty() ? "" : ", " ) + ev.rule_id + " drops " + ev.attribute;
  return out.empty() ? "none" : out;
}

inline void system_listing( std::ostream& out, rule_system const& sys )
{
  out << "```\n";
  for ( auto const& r : sys.rules() )
    out << format_rule( r, sys.get_schema() ) << "\n";
  out << "```\n";
}

inline int report_toy( run_config const& cfg, std::ostream& out, std::ostream& err )
{
  namespace fs = std::filesystem;
  auto const dir = fs::path( cfg.data_dir ) / "toy";
  auto s = unwrap( parse_schema( read_file( ( dir / "toy.schema" ).string(), err ) ), "toy.schema", err );
  auto sys = unwrap( parse_system( read_file( ( dir / "toy.rules" ).string(), err ), s ), "toy.rules", err );
  auto expected = unwrap( parse_system( read_file( ( dir / "toy_reduced.rules" ).string(), err ), s ), "toy_reduced.rules", err );
  auto data = load_dataset( ( dir / "toy.csv" ).string(), s, cfg, err );

  auto st = study( "toy", sys, &data, cfg.space_limit );
  auto rep = verify_reduction( sys, st.reduced.system, &data, cfg.space_limit );

  out << "# Reduction report: camera example\n\n";
  out << "Dataset: " << data.size() << " objects. Description space: " << st.space_before.total << " descriptions.\n\n";
  out << "| system | rules | conditions | accuracy | coverage | space coverage | conflicts |\n";
  out << "|---|---|---|---|---|---|---|\n";
  auto row = [&]( std::string const& label, rule_system const& r, metrics const& m, space_summary const& sp ) {
    auto c = compactness( r );
    out << "| " << label << " | " << c.rule_count << " | " << c.condition_count << " | " << m.accuracy().str() << " ("
        << pct( m.accuracy() ) << ") | " << m.coverage().str() << " (" << pct( m.coverage() ) << ") | " << sp.coverage().str()
        << " | " << sp.conflicting << " |\n";
  };
  row( "original", sys, *st.data_before, st.space_before );
  row( "reduced", st.reduced.system, *st.data_after, st.space_after );
  out << "\n";
  out << "Reducible: " << ( st.reduced.log.removals > 0 ? "yes" : "no" ) << " (" << st.reduced.log.removals
      << " removals: " << removed_list( st.reduced.log ) << ").\n\n";
  out << "Reduced system:\n\n";
  system_listing( out, st.reduced.system );
  out << "\nMatches the expected reduced form (toy_reduced.rules): " << ( st.reduced.system == expected ? "yes" : "no" ) << ".\n";
  out << "Verification: " << ( rep.valid ? "valid" : "invalid" ) << ".\n";
  return exit_ok;
}

inline int report_bankruptcy( run_config const& cfg, std::ostream& out, std::ostream& err )
{
  namespace fs = std::filesystem;
  auto const dir = fs::path( cfg.data_dir ) / "bankruptcy";
  auto s = unwrap( parse_schema( read_file( ( dir / "bankruptcy.schema" ).string(), err ) ), "bankruptcy.schema", err );
  auto load = [&]( std::string const& file ) {
    return unwrap( parse_system( read_file( ( dir / file ).string(), err ), s ), file, err );
  };

  std::optional<dataset> data;
  auto const csv = dir / "qualitative_bankruptcy.csv";
  if ( fs::exists( csv ) )
    data = load_dataset( csv.string(), s, cfg, err );

  std::vector<system_study> studies;
  studies.push_back( study( "GA", load( "ga.rules" ), data ? &*data : nullptr, cfg.space_limit ) );
  studies.push_back( study( "Inductive learning", load( "il.rules" ), data ? &*data : nullptr, cfg.space_limit ) );
  studies.push_back( study( "Neural networks", load( "nn.rules" ), data ? &*data : nullptr, cfg.space_limit ) );
  auto reference = load( "ga_reduced.rules" );

  out << "# Reduction report: qualitative bankruptcy rule systems\n\n";
  out << "Description space: " << studies.front().space_before.total << " descriptions (6 attributes, 3 values each).\n";
  if ( data )
    out << "Dataset: `qualitative_bankruptcy.csv`, " << data->size() << " rows.\n\n";
  else
    out << "Dataset: not available (`data/bankruptcy/qualitative_bankruptcy.csv` is missing); dataset metrics omitted.\n\n";

  out << "## Before and after reduction (guard = rules)\n\n";
  out << "| system | rules | conditions | space coverage | conflicting descriptions | removals | verdict | conditions after | space coverage after |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for ( auto const& st : studies )
    out << "| " << st.name << " | " << st.original.size() << " | " << compactness( st.original ).condition_count << " | "
        << st.space_before.coverage().str() << " | " << st.space_before.conflicting << " | " << st.reduced.log.removals << " | "
        << ( st.reduced.log.removals > 0 ? "reducible" : "irreducible" ) << " | "
        << compactness( st.reduced.system ).condition_count << " | " << st.space_after.coverage().str() << " |\n";
  out << "\n";

  if ( data )
  {
    out << "| system | accuracy before | coverage before | accuracy after | coverage after |\n|---|---|---|---|---|\n";
    for ( auto const& st : studies )
      out << "| " << st.name << " | " << st.data_before->accuracy().str() << " (" << pct( st.data_before->accuracy() ) << ") | "
          << st.data_before->coverage().str() << " (" << pct( st.data_before->coverage() ) << ") | "
          << st.data_after->accuracy().str() << " (" << pct( st.data_after->accuracy() ) << ") | "
          << st.data_after->coverage().str() << " (" << pct( st.data_after->coverage() ) << ") |\n";
    out << "\n";
  }

  out << "Published figures of the original study, for reference only (their test split is not available): "
         "GA 11 rules, coverage 18.5, accuracy 94.0; inductive learning 16 rules, 15.3, 89.7; "
         "neural networks 12 rules, 15.6, 90.3.\n\n";

  for ( auto const& st : studies )
  {
    out << "## " << st.name << "\n\n";
    out << "Removals: " << removed_list( st.reduced.log ) << ".\n";
    bool proved = std::all_of( st.reduced.log.events.begin(), st.reduced.log.events.end(), []( auto const& ev ) {
      return ev.outcome != decision::removed || ( ev.proof && ev.proof->shared == 0u );
    } );
    if ( st.reduced.log.removals > 0 )
      out << "Each removal was confirmed by enumerating all " << st.space_before.total
          << " descriptions: " << ( proved ? "no relaxed rule shares a description with an opposing rule" : "CONFLICT FOUND" ) << ".\n";
    auto subsumed = subsumed_rules( st.original );
    for ( auto const& [gone, by] : subsumed )
      out << "Note: " << gone << " is subsumed by " << by << " in the original system.\n";
    out << "\n";
  }

  auto const& ga = studies.front();
  auto pruned = subsumption_prune( ga.reduced.system );
  std::uint64_t mismatches = 0;
  for_each_description( *s, cfg.space_limit, [&]( description const& d ) {
    if ( fired_classes( pruned, d ) != fired_classes( reference, d ) )
      ++mismatches;
  } );
  out << "## GA reduced and pruned\n\n";
  system_listing( out, pruned );
  out << "\nRules: " << ga.original.size() << " -> " << pruned.size() << ". Descriptions where the fired classes differ from the "
      << "reference reduced form (ga_reduced.rules): " << mismatches << " of " << ga.space_before.total << ".\n";
  return exit_ok;
}

} // namespace detail

inline int cmd_report( run_config const& cfg, std::ostream& out, std::ostream& err )
{
  std::ostringstream doc;
  int code = exit_usage;
  if ( cfg.fixture == "toy" )
    code = detail::report_toy( cfg, doc, err );
  else if ( cfg.fixture == "bankruptcy" )
    code = detail::report_bankruptcy( cfg, doc, err );
  else
  {
    err << "error: unknown fixture '" << cfg.fixture << "' (expected toy or bankruptcy)\n";
    return exit_usage;
  }
  if ( cfg.output_path.empty() )
    out << doc.str();
  else
    detail::write_file( cfg.output_path, doc.str(), err );
  return code;
}

/*! \brief Parses `args` (without the program name) and runs the selected subcommand. */
inline int run( std::vector<std::string> const& args, std::ostream& out, std::ostream& err )
{
  run_config cfg;
  CLI::App app{ "Evaluate, reduce and verify rule-based classification systems", "rulesys" };
  app.require_subcommand( 1, 1 );

  std::map<std::string, policy> const policies{ { "strict", policy::strict }, { "any-correct", policy::any_correct } };
  std::map<std::string, guard_mode> const guards{ { "rules", guard_mode::rules }, { "data", guard_mode::data } };
  std::map<std::string, output_format> const formats{ { "table", output_format::table },
                                                      { "interchange", output_format::interchange },
                                                      { "json", output_format::interchange },
                                                      { "markdown", output_format::markdown } };

  auto add_common = [&]( CLI::App* sub ) {
    sub->add_option( "--schema", cfg.schema_path, "Schema file (omit when the system embeds its schema)" );
    sub->add_option( "--format", cfg.format, "Output format: table, interchange (json) or markdown" )
        ->transform( CLI::CheckedTransformer( formats, CLI::ignore_case ) );
  };
  auto add_dataset = [&]( CLI::App* sub, bool required ) {
    auto* opt = sub->add_option( "--dataset", cfg.dataset_path, "Labeled CSV dataset" );
    if ( required )
      opt->required();
    sub->add_option( "--label-column", cfg.label_column, "Name of the label column" );
    sub->add_option( "--columns", cfg.columns, "Column order for header-less CSV (attribute names and the label column)" )
        ->delimiter( ',' );
  };

  auto* validate = app.add_subcommand( "validate", "Parse a rule system and check its invariants" );
  add_common( validate );
  validate->add_option( "system,--system", cfg.system_path, "Rule system file" )->required();

  auto* evaluate_cmd = app.add_subcommand( "evaluate", "Accuracy, coverage and compactness on a dataset" );
  add_common( evaluate_cmd );
  evaluate_cmd->add_option( "system,--system", cfg.system_path, "Rule system file" )->required();
  add_dataset( evaluate_cmd, true );
  evaluate_cmd->add_option( "--policy", cfg.eval_policy, "strict or any-correct" )
      ->transform( CLI::CheckedTransformer( policies, CLI::ignore_case ) );
  evaluate_cmd->add_flag( "--space", cfg.space, "Also report coverage of the full description space" );
  evaluate_cmd->add_option( "--space-limit", cfg.space_limit, "Largest description space to enumerate" );

  auto* reduce_cmd = app.add_subcommand( "reduce", "Drop elementary conditions that no opposing rule needs" );
  add_common( reduce_cmd );
  reduce_cmd->add_option( "system,--system", cfg.system_path, "Rule system file" )->required();
  add_dataset( reduce_cmd, false );
  reduce_cmd->add_option( "--guard", cfg.guard, "rules or data" )->transform( CLI::CheckedTransformer( guards, CLI::ignore_case ) );
  reduce_cmd->add_flag( "--prune", cfg.prune, "Remove subsumed rules after reduction" );
  reduce_cmd->add_flag( "!--no-prove", cfg.prove, "Skip the enumeration check of accepted removals" );
  reduce_cmd->add_option( "-o,--output", cfg.output_path, "Write the reduced system here (.json selects interchange)" );
  reduce_cmd->add_option( "--log", cfg.log_path, "Write the reduction log (interchange) here" );
  reduce_cmd->add_option( "--space-limit", cfg.space_limit, "Largest description space to enumerate" );

  auto* verify_cmd = app.add_subcommand( "verify", "Check that one system is a valid reduction of another" );
  add_common( verify_cmd );
  verify_cmd->add_option( "--original", cfg.original_path, "Original rule system" )->required();
  verify_cmd->add_option( "--reduced", cfg.reduced_path, "Reduced rule system" )->required();
  add_dataset( verify_cmd, false );
  verify_cmd->add_option( "--space-limit", cfg.space_limit, "Largest description space to enumerate" );

  auto* report_cmd = app.add_subcommand( "report", "Markdown report over a bundled fixture" );
  report_cmd->add_option( "--fixture", cfg.fixture, "toy or bankruptcy" )->required();
  report_cmd->add_option( "--data-dir", cfg.data_dir, "Fixture directory" );
  report_cmd->add_option( "-o,--output", cfg.output_path, "Write the report here" );
  report_cmd->add_option( "--space-limit", cfg.space_limit, "Largest description space to enumerate" );

  std::vector<std::string> reversed( args.rbegin(), args.rend() );
  try
  {
    app.parse( reversed );
  }
  catch ( CLI::ParseError const& e )
  {
    auto code = app.exit( e, out, err );
    return code == 0 ? exit_ok : exit_usage;
  }

  try
  {
    auto const* sub = app.get_subcommands().front();
    cfg.subcommand = sub->get_name();
    if ( cfg.subcommand == "validate" )
      return cmd_validate( cfg, out, err );
    if ( cfg.subcommand == "evaluate" )
      return cmd_evaluate( cfg, out, err );
    if ( cfg.subcommand == "reduce" )
      return cmd_reduce( cfg, out, err );
    if ( cfg.subcommand == "verify" )
      return cmd_verify( cfg, out, err );
    return cmd_report( cfg, out, err );
  }
  catch ( exit_request const& e )
  {
    return e.code;
  }
  catch ( usage_error const& e )
  {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }
  catch ( size_error const& e )
  {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }
  catch ( error const& e )
  {
    err << "error: " << e.what() << "\n";
    return exit_invalid;
  }
}

} // namespace rulesys::cli
