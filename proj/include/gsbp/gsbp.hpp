#ifndef GSBP_GSBP_HPP_
#define GSBP_GSBP_HPP_

#include "gsbp/convection.hpp"
#include "gsbp/integrate.hpp"
#include "gsbp/io.hpp"
#include "gsbp/nodes.hpp"
#include "gsbp/operator.hpp"
#include "gsbp/registry.hpp"
#include "gsbp/rooted_trees.hpp"
#include "gsbp/study.hpp"
#include "gsbp/tableau.hpp"
#include "gsbp/types.hpp"
#include "gsbp/verify.hpp"

#endif  // GSBP_GSBP_HPP_
