#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <rulesys/rulesys.hpp>

namespace fixtures
{

inline std::filesystem::path data_dir()
{
  return RULESYS_DATA_DIR;
}

inline std::string read( std::filesystem::path const& p )
{
  std::ifstream in( p, std::ios::binary );
  if ( !in )
    throw std::runtime_error( "missing fixture " + p.string() );
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline rulesys::schema_ptr toy_schema()
{
  static auto s = rulesys::parse_schema( read( data_dir() / "toy" / "toy.schema" ) ).get();
  return s;
}

inline rulesys::rule_system toy_system()
{
  return rulesys::parse_system( read( data_dir() / "toy" / "toy.rules" ), toy_schema() ).get();
}

inline rulesys::rule_system toy_reduced()
{
  return rulesys::parse_system( read( data_dir() / "toy" / "toy_reduced.rules" ), toy_schema() ).get();
}

inline rulesys::dataset toy_data()
{
  return rulesys::parse_dataset( read( data_dir() / "toy" / "toy.csv" ), toy_schema() ).get();
}

inline rulesys::schema_ptr bankruptcy_schema()
{
  static auto s = rulesys::parse_schema( read( data_dir() / "bankruptcy" / "bankruptcy.schema" ) ).get();
  return s;
}

inline rulesys::rule_system bankruptcy_system( std::string const& file )
{
  return rulesys::parse_system( read( data_dir() / "bankruptcy" / file ), bankruptcy_schema() ).get();
}

inline std::filesystem::path bankruptcy_csv()
{
  return data_dir() / "bankruptcy" / "qualitative_bankruptcy.csv";
}

inline std::optional<rulesys::dataset> bankruptcy_data()
{
  if ( !std::filesystem::exists( bankruptcy_csv() ) )
    return std::nullopt;
  return rulesys::parse_dataset( read( bankruptcy_csv() ), bankruptcy_schema() ).get();
}

/*! \brief Builds a rule from attribute-name -> value-name lists. */
inline rulesys::rule make_rule( rulesys::schema const& s, std::string id, std::string const& cls,
                                std::vector<std::pair<std::string, std::vector<std::string>>> const& conds )
{
  rulesys::rule r;
  r.id = std::move( id );
  r.class_id = s.class_index( cls );
  for ( auto const& [attr, values] : conds )
  {
    auto a = s.attribute_index( attr );
    rulesys::value_set vs( s.domain_size( a ) );
    for ( auto const& v : values )
      vs.insert( s.find_value( a, v ).value() );
    r.conditions.emplace( a, vs );
  }
  return r;
}

} // namespace fixtures
