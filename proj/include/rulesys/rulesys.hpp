/*!
  \file rulesys.hpp
  \brief Convenience header including the whole library
*/

#pragma once

#include "errors.hpp"
#include "value_set.hpp"
#include "model.hpp"
#include "textio.hpp"
#include "eval.hpp"
#include "reduce.hpp"
#include "report.hpp"
