#ifndef DEMPOOL_DEMPOOL_HPP
#define DEMPOOL_DEMPOOL_HPP

// Umbrella header for the democratic second-order pooling library.

#include "dempool/aggregate.hpp"
#include "dempool/analysis.hpp"
#include "dempool/bench.hpp"
#include "dempool/classify.hpp"
#include "dempool/common.hpp"
#include "dempool/features.hpp"
#include "dempool/kernel.hpp"
#include "dempool/sinkhorn.hpp"
#include "dempool/sketch.hpp"
#include "dempool/spectral.hpp"

#endif  // DEMPOOL_DEMPOOL_HPP
