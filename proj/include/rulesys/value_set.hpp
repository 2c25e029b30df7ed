/*!
  \file value_set.hpp
  \brief Fixed-universe bit set over the value indices of one attribute domain
*/

#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace rulesys
{

/*! \brief Subset of {0, ..., universe-1}.
 *
 * Every elementary condition of a rule is stored as a value_set over the
 * domain of the constrained attribute. Two sets are only comparable when they
 * share the same universe size.
 */
class value_set
{
public:
  value_set() = default;

  explicit value_set( std::size_t universe )
      : universe_( universe ), words_( ( universe + 63u ) / 64u, 0u )
  {
  }

  value_set( std::size_t universe, std::initializer_list<std::size_t> members )
      : value_set( universe )
  {
    for ( auto m : members )
      insert( m );
  }

  static value_set full( std::size_t universe )
  {
    value_set s( universe );
    for ( std::size_t i = 0; i < universe; ++i )
      s.insert( i );
    return s;
  }

  /*! \brief Values in the closed index range [first, last]. */
  static value_set range( std::size_t universe, std::size_t first, std::size_t last )
  {
    value_set s( universe );
    for ( std::size_t i = first; i <= last && i < universe; ++i )
      s.insert( i );
    return s;
  }

  std::size_t universe() const noexcept { return universe_; }

  void insert( std::size_t i )
  {
    words_[i / 64u] |= std::uint64_t{ 1 } << ( i % 64u );
  }

  void erase( std::size_t i )
  {
    words_[i / 64u] &= ~( std::uint64_t{ 1 } << ( i % 64u ) );
  }

  bool contains( std::size_t i ) const noexcept
  {
    return i < universe_ && ( ( words_[i / 64u] >> ( i % 64u ) ) & 1u );
  }

  std::size_t count() const noexcept
  {
    std::size_t c = 0;
    for ( auto w : words_ )
      c += static_cast<std::size_t>( std::popcount( w ) );
    return c;
  }

  bool empty() const noexcept
  {
    return std::all_of( words_.begin(), words_.end(), []( auto w ) { return w == 0u; } );
  }

  bool is_full() const noexcept { return count() == universe_; }

  bool intersects( value_set const& other ) const noexcept
  {
    auto const n = std::min( words_.size(), other.words_.size() );
    for ( std::size_t i = 0; i < n; ++i )
      if ( words_[i] & other.words_[i] )
        return true;
    return false;
  }

  bool is_subset_of( value_set const& other ) const noexcept
  {
    for ( std::size_t i = 0; i < words_.size(); ++i )
    {
      auto const o = i < other.words_.size() ? other.words_[i] : 0u;
      if ( words_[i] & ~o )
        return false;
    }
    return true;
  }

  value_set& operator&=( value_set const& other )
  {
    for ( std::size_t i = 0; i < words_.size(); ++i )
      words_[i] &= i < other.words_.size() ? other.words_[i] : 0u;
    return *this;
  }

  value_set& operator|=( value_set const& other )
  {
    for ( std::size_t i = 0; i < words_.size() && i < other.words_.size(); ++i )
      words_[i] |= other.words_[i];
    return *this;
  }

  friend value_set operator&( value_set a, value_set const& b ) { return a &= b; }
  friend value_set operator|( value_set a, value_set const& b ) { return a |= b; }

  /*! \brief Complement within the universe. */
  value_set complement() const
  {
    value_set s( universe_ );
    for ( std::size_t i = 0; i < universe_; ++i )
      if ( !contains( i ) )
        s.insert( i );
    return s;
  }

  /*! \brief Member indices in increasing order. */
  std::vector<std::size_t> members() const
  {
    std::vector<std::size_t> out;
    for ( std::size_t i = 0; i < universe_; ++i )
      if ( contains( i ) )
        out.push_back( i );
    return out;
  }

  friend bool operator==( value_set const&, value_set const& ) = default;

private:
  std::size_t universe_ = 0;
  std::vector<std::uint64_t> words_;
};

} // namespace rulesys
