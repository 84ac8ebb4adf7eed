#pragma once

#include <fdmean/grid_basis.hpp>
#include <fdmean/normal.hpp>
#include <fdmean/random.hpp>
#include <fdmean/process_sim.hpp>
#include <fdmean/estimator.hpp>
#include <fdmean/selector.hpp>
#include <fdmean/bands.hpp>
#include <fdmean/metrics.hpp>
