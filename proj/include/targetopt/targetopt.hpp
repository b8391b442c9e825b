#ifndef TARGETOPT_TARGETOPT_HPP
#define TARGETOPT_TARGETOPT_HPP

#include <targetopt/error.hpp>
#include <targetopt/rng.hpp>
#include <targetopt/dataspace.hpp>
#include <targetopt/reduction.hpp>
#include <targetopt/regression.hpp>
#include <targetopt/rootsearch.hpp>
#include <targetopt/optimizer.hpp>
#include <targetopt/baselines.hpp>
#include <targetopt/simbench.hpp>
#include <targetopt/io.hpp>
#include <targetopt/state.hpp>
#include <targetopt/study.hpp>

#endif
