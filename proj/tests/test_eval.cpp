#include <catch_amalgamated.hpp>

#include <random>

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracle.hpp"

using namespace rulesys;

namespace
{

/* toy system plus a Car rule that fires with R1_1 on (2, LE3) */
rule_system toy_with_conflict()
{
  auto sys = fixtures::toy_system();
  auto rules = sys.rules();
  rules.push_back( fixtures::make_rule( sys.get_schema(), "X", "Car", { { "W", { "LE3" } } } ) );
  return rule_system( sys.shared_schema(), rules );
}

} // namespace

TEST_CASE( "rational compares by value", "[eval]" )
{
  CHECK( rational{ 4, 5 } == rational{ 8, 10 } );
  CHECK( rational{ 30, 40 } < rational{ 31, 40 } );
  CHECK( rational{ 1, 1 } <= rational{ 5, 5 } );
  CHECK( rational{ 4, 5 }.str() == "4/5" );
  CHECK( rational{ 4, 5 }.value() == Catch::Approx( 0.8 ) );
}

TEST_CASE( "toy evaluation", "[eval]" )
{
  auto ev = evaluate( fixtures::toy_system(), fixtures::toy_data() );
  auto const& m = ev.summary;
  CHECK( m.accuracy().num == 4u );
  CHECK( m.accuracy().den == 5u );
  CHECK( m.coverage().num == 4u );
  CHECK( m.coverage().den == 5u );
  CHECK( m.accuracy_on_covered() == rational{ 1, 1 } );
  CHECK( m.conflict_rows == 0u );
  CHECK( m.rule_count == 3u );
  CHECK( m.condition_count == 6u );
  REQUIRE( ev.outcomes.size() == 5u );
  CHECK( ev.outcomes[4].result == verdict::uncovered );
  CHECK( ev.outcomes[4].fired.empty() );
  CHECK( ev.outcomes[3].fired == std::vector<std::size_t>{ 1 } );
  CHECK( m.per_rule_fire_counts == std::vector<std::pair<std::string, std::size_t>>{ { "R1_1", 1 }, { "R1_2", 2 }, { "R2_1", 1 } } );
}

TEST_CASE( "reduced toy evaluation", "[eval]" )
{
  auto m = evaluate( fixtures::toy_reduced(), fixtures::toy_data() ).summary;
  CHECK( m.accuracy() == rational{ 1, 1 } );
  CHECK( m.coverage() == rational{ 1, 1 } );
  CHECK( m.condition_count == 4u );
}

TEST_CASE( "strict and any-correct on a conflicting row", "[eval]" )
{
  auto sys = toy_with_conflict();
  auto strict = evaluate( sys, fixtures::toy_data(), policy::strict );
  CHECK( strict.summary.accuracy() == rational{ 3, 5 } );
  CHECK( strict.summary.coverage() == rational{ 5, 5 } );
  CHECK( strict.summary.conflict_rows == 1u );
  CHECK( strict.outcomes[0].result == verdict::conflict );
  CHECK( strict.outcomes[4].result == verdict::misclassified );

  auto any = evaluate( sys, fixtures::toy_data(), policy::any_correct );
  CHECK( any.summary.accuracy() == rational{ 4, 5 } );
  CHECK( any.outcomes[0].result == verdict::correct );
  CHECK( any.outcomes[4].result == verdict::misclassified );
}

TEST_CASE( "evaluation edge cases", "[eval]" )
{
  auto s = fixtures::toy_schema();
  auto none = evaluate( rule_system( s, {} ), fixtures::toy_data() ).summary;
  CHECK( none.accuracy() == rational{ 0, 5 } );
  CHECK( none.coverage() == rational{ 0, 5 } );
  CHECK( none.accuracy_on_covered() == rational{ 0, 1 } );

  CHECK_THROWS_AS( evaluate( fixtures::toy_system(), dataset( s, {} ) ), usage_error );
  auto other = fixtures::bankruptcy_schema();
  CHECK_THROWS_AS( evaluate( fixtures::toy_system(), dataset( other, {} ) ), schema_mismatch );
}

TEST_CASE( "space coverage of the toy systems", "[eval]" )
{
  auto before = summarize_space( fixtures::toy_system() );
  CHECK( before.total == 40u );
  CHECK( before.covered == 30u );
  CHECK( before.conflicting == 0u );
  auto after = space_coverage( fixtures::toy_reduced() );
  CHECK( after.num == 31u );
  CHECK( after.den == 40u );

  CHECK( before.covered == oracle::space_covered( fixtures::toy_system().rules(), *fixtures::toy_schema() ) );
  CHECK( after.num == oracle::space_covered( fixtures::toy_reduced().rules(), *fixtures::toy_schema() ) );
  CHECK_THROWS_AS( space_coverage( fixtures::toy_system(), 39 ), size_error );
}

TEST_CASE( "space coverage of the reference reduced GA system", "[eval]" )
{
  auto sys = fixtures::bankruptcy_system( "ga_reduced.rules" );
  auto sum = summarize_space( sys );
  CHECK( sum.total == 729u );
  CHECK( sum.covered == 729u );
  CHECK( sum.conflicting == 0u );
  CHECK( sum.covered == oracle::space_covered( sys.rules(), sys.get_schema() ) );
}

TEST_CASE( "fired_classes", "[eval]" )
{
  auto sys = toy_with_conflict();
  CHECK( fired_classes( sys, { 1, 0 } ) == std::vector<std::size_t>{ 0, 1 } );
  CHECK( fired_classes( sys, { 1, 1 } ) == std::vector<std::size_t>{ 1 } );
  CHECK( fired_classes( fixtures::toy_system(), { 0, 1 } ).empty() );
}

TEST_CASE( "conflict_pairs", "[eval]" )
{
  CHECK( conflict_pairs( fixtures::toy_system() ).empty() );
  CHECK( conflict_pairs( toy_with_conflict() ) == std::vector<std::pair<std::string, std::string>>{ { "R1_1", "X" } } );
  auto tampered = fixtures::toy_system().rules();
  tampered[2].conditions.erase( 0 );
  CHECK( conflict_pairs( rule_system( fixtures::toy_schema(), tampered ) ) ==
         std::vector<std::pair<std::string, std::string>>{ { "R1_2", "R2_1" } } );
}

TEST_CASE( "compactness of the fixtures", "[eval]" )
{
  auto ga = compactness( fixtures::bankruptcy_system( "ga.rules" ) );
  CHECK( ga.rule_count == 11u );
  CHECK( ga.condition_count == 39u );
  CHECK( compactness( fixtures::bankruptcy_system( "il.rules" ) ).rule_count == 16u );
  CHECK( compactness( fixtures::bankruptcy_system( "nn.rules" ) ).rule_count == 12u );
  auto toy = compactness( fixtures::toy_system() );
  CHECK( toy.mean_conditions_per_rule == Catch::Approx( 2.0 ) );
  CHECK( compactness( rule_system( fixtures::toy_schema(), {} ) ).mean_conditions_per_rule == 0.0 );
}

TEST_CASE( "evaluation agrees with the brute-force oracle", "[eval][property]" )
{
  std::mt19937_64 rng( 31 );
  for ( int i = 0; i < 200; ++i )
  {
    auto s = gen::schema( rng );
    auto sys = gen::system( rng, s );
    auto data = gen::data( rng, s, 50 );
    auto m = evaluate( sys, data ).summary;
    INFO( "instance " << i );
    CHECK( m.covered == oracle::rows_covered( sys.rules(), data ) );
    CHECK( m.correct == oracle::rows_strict_correct( sys.rules(), data ) );
    auto sp = summarize_space( sys );
    CHECK( sp.covered == oracle::space_covered( sys.rules(), *s ) );
    CHECK( sp.conflicting == oracle::space_conflicts( sys.rules(), *s ) );
    CHECK( m.correct <= m.covered );
    CHECK( evaluate( sys, data, policy::strict ).summary.correct <= evaluate( sys, data, policy::any_correct ).summary.correct );
  }
}
