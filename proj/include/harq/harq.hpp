#pragma once

#include "harq/amc.hpp"
#include "harq/channel.hpp"
#include "harq/coding.hpp"
#include "harq/harq_analysis.hpp"
#include "harq/mi_density.hpp"
#include "harq/optimizer.hpp"
#include "harq/quadrature.hpp"
#include "harq/regions.hpp"
#include "harq/simulator.hpp"
#include "harq/sweep.hpp"
#include "harq/verify.hpp"
