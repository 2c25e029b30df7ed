/*!
  \file errors.hpp
  \brief Exception types thrown by the rulesys library
*/

#pragma once

#include <stdexcept>
#include <string>

namespace rulesys
{

/*! \brief Base class for all library errors. */
class error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/*! \brief A schema invariant is violated while building a schema. */
class schema_error : public error
{
public:
  using error::error;
};

/*! \brief A value, rule, or object does not belong to the schema it is used with. */
class schema_mismatch : public error
{
public:
  using error::error;
};

/*! \brief A rule or rule system violates one of its invariants. */
class rule_error : public error
{
public:
  using error::error;
};

/*! \brief An operation was applied to arguments outside its domain (e.g. rules of the same class). */
class domain_error : public error
{
public:
  using error::error;
};

/*! \brief An enumeration or brute-force search exceeds its configured limit. */
class size_error : public error
{
public:
  using error::error;
};

/*! \brief Inconsistent options passed to an operation. */
class usage_error : public error
{
public:
  using error::error;
};

} // namespace rulesys
