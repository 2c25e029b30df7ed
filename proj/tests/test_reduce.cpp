#include <catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracle.hpp"

using namespace rulesys;

namespace
{

using index_list = std::vector<std::size_t>;

rule_system ga()
{
  return fixtures::bankruptcy_system( "ga.rules" );
}

std::size_t ga_attr( std::string const& name )
{
  return fixtures::bankruptcy_schema()->attribute_index( name );
}

} // namespace

TEST_CASE( "corollary_filter", "[reduce]" )
{
  auto toy = fixtures::toy_system();
  CHECK( corollary_filter( toy[0], toy[2], toy.get_schema() ) == index_list{ 0, 1 } );

  auto g = ga();
  auto const& s = g.get_schema();
  CHECK( corollary_filter( g[*g.find( "Rule8" )], g[*g.find( "Rule7" )], s ) == index_list{ ga_attr( "MR" ), ga_attr( "CO" ) } );

  auto ir = fixtures::make_rule( s, "a", "B", { { "IR", { "N" } } } );
  auto op = fixtures::make_rule( s, "b", "NB", { { "OP", { "N" } } } );
  CHECK( corollary_filter( ir, op, s ).empty() );
  CHECK( overlaps( ir, op, s ) );

  CHECK_THROWS_AS( corollary_filter( toy[0], toy[1], toy.get_schema() ), domain_error );
}

TEST_CASE( "reducible_conditions", "[reduce]" )
{
  auto toy = fixtures::toy_system();
  CHECK( reducible_conditions( toy[0], toy ) == index_list{ 0 } );
  CHECK( reducible_conditions( toy[2], toy ).empty() );

  auto single = fixtures::toy_reduced();
  CHECK( reducible_conditions( single[0], single ).empty() );
}

TEST_CASE( "reducible_conditions on GA Rule3 follows the definition", "[reduce]" )
{
  /* Rule3 is {FF:{P}, CO:{P}}; either condition alone is exclusive with the Bankrupt rules */
  auto g = ga();
  auto const& s = g.get_schema();
  auto const& r3 = g[*g.find( "Rule3" )];
  auto const got = reducible_conditions( r3, g );
  CHECK( got == index_list{ ga_attr( "FF" ), ga_attr( "CO" ) } );
  for ( auto a : got )
    CHECK( oracle::exclusive_with_opposing( without_condition( r3, a ), g.rules(), s ) );
}

TEST_CASE( "reducible_conditions agrees with enumeration", "[reduce][property]" )
{
  std::mt19937_64 rng( 41 );
  for ( int i = 0; i < 200; ++i )
  {
    auto s = gen::schema( rng );
    auto sys = gen::system( rng, s );
    for ( auto const& r : sys.rules() )
    {
      index_list expected;
      if ( r.size() > 1u )
        for ( auto const& [a, values] : r.conditions )
          if ( oracle::exclusive_with_opposing( without_condition( r, a ), sys.rules(), *s ) )
            expected.push_back( a );
      CHECK( reducible_conditions( r, sys ) == expected );
    }
  }
}

TEST_CASE( "greedy_reduce on the toy system", "[reduce]" )
{
  auto res = greedy_reduce( fixtures::toy_system() );
  CHECK( res.system == fixtures::toy_reduced() );
  CHECK( res.log.removals == 2u );
  REQUIRE( res.log.events.size() == 6u );

  auto const& e = res.log.events;
  CHECK( e[0].rule_id == "R1_1" );
  CHECK( e[0].attribute == "P" );
  CHECK( e[0].outcome == decision::removed );
  CHECK( e[1].reason == block_reason::last_condition );
  CHECK( e[2].reason == block_reason::opposing_overlap );
  CHECK( e[2].blocking_rule == "R2_1" );
  CHECK( e[3].outcome == decision::removed );
  CHECK( e[4].blocking_rule == "R1_2" );
  CHECK( e[5].blocking_rule == "R1_1" );
  CHECK( res.log.final_hash == system_hash( fixtures::toy_reduced() ) );
  CHECK( replay( fixtures::toy_system(), res.log ) == res.system );
}

TEST_CASE( "greedy_reduce with proofs", "[reduce]" )
{
  reduce_options opts;
  opts.prove = true;
  auto res = greedy_reduce( fixtures::toy_system(), opts );
  for ( auto const& ev : res.log.events )
  {
    CHECK( ev.proof.has_value() == ( ev.outcome == decision::removed ) );
    if ( ev.proof )
    {
      CHECK( ev.proof->descriptions == 40u );
      CHECK( ev.proof->opposing_rules == 1u );
      CHECK( ev.proof->shared == 0u );
    }
  }
  opts.space_limit = 10;
  for ( auto const& ev : greedy_reduce( fixtures::toy_system(), opts ).log.events )
    CHECK_FALSE( ev.proof );
}

TEST_CASE( "greedy_reduce on a single-class system keeps the last condition", "[reduce]" )
{
  auto s = fixtures::bankruptcy_schema();
  auto sys = parse_system( "rule NB :a :- IR = N, FF = A, OP = P\nrule NB :b :- MR = A, CO = N\n", s ).get();
  auto res = greedy_reduce( sys );
  REQUIRE( res.system.size() == 2u );
  CHECK( res.system[0].conditions.size() == 1u );
  CHECK( res.system[0].conditions.count( s->attribute_index( "OP" ) ) == 1u );
  CHECK( res.system[1].conditions.count( s->attribute_index( "CO" ) ) == 1u );
  CHECK( res.log.removals == 3u );
}

TEST_CASE( "greedy_reduce data guard", "[reduce]" )
{
  CHECK_THROWS_AS( greedy_reduce( fixtures::toy_system(), { guard_mode::data, nullptr } ), usage_error );

  auto data = fixtures::toy_data();
  reduce_options opts{ guard_mode::data, &data };
  auto res = greedy_reduce( fixtures::toy_system(), opts );
  CHECK( res.system == fixtures::toy_reduced() );
  auto const& first = res.log.events.front();
  REQUIRE( first.guard );
  CHECK( first.guard->before == rational{ 4, 5 } );
  CHECK( first.guard->after == rational{ 5, 5 } );
  CHECK( first.guard->passed );

  auto empty = dataset( fixtures::toy_schema(), {} );
  CHECK_THROWS_AS( greedy_reduce( fixtures::toy_system(), { guard_mode::data, &empty } ), usage_error );
}

TEST_CASE( "greedy_reduce is deterministic", "[reduce]" )
{
  auto a = greedy_reduce( ga() );
  auto b = greedy_reduce( ga() );
  CHECK( a.system == b.system );
  CHECK( a.log.final_hash == b.log.final_hash );
  CHECK( serialize_system( a.system ) == serialize_system( b.system ) );
  CHECK( log_to_json( a.log, guard_mode::rules ).dump() == log_to_json( b.log, guard_mode::rules ).dump() );
}

TEST_CASE( "replay rejects unknown rules", "[reduce]" )
{
  reduction_log log;
  reduction_event ev;
  ev.rule_id = "nope";
  ev.attribute = "P";
  ev.outcome = decision::removed;
  log.events.push_back( ev );
  CHECK_THROWS_AS( replay( fixtures::toy_system(), log ), domain_error );
}

TEST_CASE( "minimal_reductions_oracle examples", "[reduce]" )
{
  auto toy = fixtures::toy_system();
  CHECK( minimal_reductions_oracle( toy[0], toy ) == std::vector<index_list>{ { 1 } } );
  CHECK( minimal_reductions_oracle( toy[1], toy ) == std::vector<index_list>{ { 0 } } );
  CHECK( minimal_reductions_oracle( toy[2], toy ) == std::vector<index_list>{ { 0, 1 } } );

  auto s = fixtures::bankruptcy_schema();
  auto single = parse_system( "rule NB :a :- IR = N, FF = A, OP = P\n", s ).get();
  auto const singletons = minimal_reductions_oracle( single[0], single );
  CHECK( singletons == std::vector<index_list>{ { ga_attr( "IR" ) }, { ga_attr( "FF" ) }, { ga_attr( "OP" ) } } );

  auto conflicting = parse_system( "rule NB :a :- IR = N\nrule B :b :- IR = N\n", s ).get();
  CHECK( minimal_reductions_oracle( conflicting[0], conflicting ).empty() );

  CHECK_THROWS_AS( minimal_reductions_oracle( toy[0], toy, { 1, 100 } ), size_error );
  CHECK_THROWS_AS( minimal_reductions_oracle( toy[0], toy, { 20, 0 } ), size_error );
}

TEST_CASE( "oracle sets are exactly the minimal exclusive subsets", "[reduce][property]" )
{
  std::mt19937_64 rng( 42 );
  for ( int i = 0; i < 150; ++i )
  {
    auto s = gen::schema( rng );
    auto sys = gen::system( rng, s );
    for ( auto const& r : sys.rules() )
    {
      index_list attrs;
      for ( auto const& [a, v] : r.conditions )
        attrs.push_back( a );
      auto restrict_to = [&]( unsigned mask ) {
        rule out = r;
        for ( std::size_t p = 0; p < attrs.size(); ++p )
          if ( !( mask & ( 1u << p ) ) )
            out.conditions.erase( attrs[p] );
        return out;
      };
      std::vector<unsigned> exclusive_masks;
      for ( unsigned m = 1; m < ( 1u << attrs.size() ); ++m )
        if ( oracle::exclusive_with_opposing( restrict_to( m ), sys.rules(), *s ) )
          exclusive_masks.push_back( m );
      std::set<index_list> expected;
      for ( auto m : exclusive_masks )
      {
        bool minimal = std::none_of( exclusive_masks.begin(), exclusive_masks.end(),
                                     [&]( unsigned o ) { return o != m && ( o & m ) == o; } );
        if ( minimal )
        {
          index_list kept;
          for ( auto const& [a, v] : restrict_to( m ).conditions )
            kept.push_back( a );
          expected.insert( kept );
        }
      }
      auto got = minimal_reductions_oracle( r, sys );
      CHECK( std::set<index_list>( got.begin(), got.end() ) == expected );
      CHECK( got.size() == expected.size() );
    }
  }
}

TEST_CASE( "subsumption_prune", "[reduce]" )
{
  auto reduced = greedy_reduce( ga() ).system;
  auto pruned = subsumption_prune( reduced );
  CHECK( pruned.size() <= 11u );
  std::vector<std::string> ids;
  for ( auto const& r : pruned.rules() )
    ids.push_back( r.id );
  CHECK( ids == std::vector<std::string>{ "Rule1", "Rule2", "Rule3", "Rule5", "Rule10" } );
  auto const& s = pruned.get_schema();
  for ( std::size_t i = 0; i < pruned.size(); ++i )
    for ( std::size_t j = 0; j < pruned.size(); ++j )
      if ( i != j && pruned[i].class_id == pruned[j].class_id )
        CHECK_FALSE( subsumes( pruned[j], pruned[i], s ) );
  for_each_description( s, 1000, [&]( description const& d ) { CHECK( fired_classes( pruned, d ) == fired_classes( reduced, d ) ); } );
}

TEST_CASE( "subsumption_prune keeps the earlier of two duplicates", "[reduce]" )
{
  auto s = fixtures::toy_schema();
  auto sys = parse_system( "rule Car :a :- P = 2\nrule Car :b :- P = 2\nrule NotCar :c :- P = 3\n", s ).get();
  auto pruned = subsumption_prune( sys );
  REQUIRE( pruned.size() == 2u );
  CHECK( pruned[0].id == "a" );
  CHECK( subsumed_rules( sys ) == std::vector<std::pair<std::string, std::string>>{ { "b", "a" } } );
}

TEST_CASE( "subsumption_prune is a fixpoint without subsumption", "[reduce]" )
{
  auto toy = fixtures::toy_system();
  CHECK( serialize_system( subsumption_prune( toy ) ) == serialize_system( toy ) );
  auto nn = fixtures::bankruptcy_system( "nn.rules" );
  CHECK( subsumed_rules( nn ) == std::vector<std::pair<std::string, std::string>>{ { "Rule12", "Rule11" } } );
}

TEST_CASE( "verify_reduction on the toy pair", "[reduce]" )
{
  auto data = fixtures::toy_data();
  auto rep = verify_reduction( fixtures::toy_system(), fixtures::toy_reduced(), &data );
  CHECK( rep.valid );
  CHECK_FALSE( rep.violated );
  CHECK( rep.modified_rules == std::vector<std::string>{ "R1_1", "R1_2" } );
  CHECK( *rep.dataset_coverage_before == rational{ 4, 5 } );
  CHECK( *rep.dataset_coverage_after == rational{ 5, 5 } );
  REQUIRE( rep.space_enumerated );
  CHECK( rep.space_coverage_before->num == 30u );
  CHECK( rep.space_coverage_after->num == 31u );
  CHECK( rep.changed_descriptions == 1u );
  CHECK( rep.newly_covered == 1u );
  CHECK( rep.sample_changes == std::vector<description>{ { 0, 0 } } );
}

TEST_CASE( "verify_reduction on a tampered pair", "[reduce]" )
{
  auto rules = fixtures::toy_reduced().rules();
  rules[2].conditions.erase( 0 );
  rule_system tampered( fixtures::toy_schema(), rules );
  auto rep = verify_reduction( fixtures::toy_system(), tampered );
  CHECK_FALSE( rep.valid );
  CHECK( rep.violated == verification_clause::exclusivity );
  REQUIRE( rep.blocking_pair );
  std::set<std::string> pair{ rep.blocking_pair->first, rep.blocking_pair->second };
  CHECK( pair == std::set<std::string>{ "R1_2", "R2_1" } );
}

TEST_CASE( "verify_reduction other clauses", "[reduce]" )
{
  auto toy = fixtures::toy_system();
  auto same = verify_reduction( toy, toy );
  CHECK( same.valid );
  CHECK( same.modified_rules.empty() );
  CHECK( same.changed_descriptions == 0u );

  auto grown = toy.rules();
  grown[2].conditions.at( 0 ).insert( 2 );
  auto rep = verify_reduction( toy, rule_system( toy.shared_schema(), grown ) );
  CHECK( rep.violated == verification_clause::subset );

  auto renamed = toy.rules();
  renamed[0].id = "Z";
  CHECK_THROWS_AS( verify_reduction( toy, rule_system( toy.shared_schema(), renamed ) ), rule_error );

  auto dropped = toy.rules();
  dropped.pop_back();
  auto lost = verify_reduction( toy, rule_system( toy.shared_schema(), dropped ) );
  CHECK_FALSE( lost.valid );
  CHECK( lost.dropped_rules == std::vector<std::string>{ "R2_1" } );
  CHECK( lost.violated == verification_clause::coverage );

  auto ga_sys = ga();
  auto pruned = subsumption_prune( greedy_reduce( ga_sys ).system );
  auto ok = verify_reduction( ga_sys, pruned );
  CHECK( ok.valid );
  CHECK( ok.dropped_rules.size() == 6u );
}
