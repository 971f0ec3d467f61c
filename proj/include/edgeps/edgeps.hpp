#pragma once

#include "edgeps/error.hpp"
#include "edgeps/raster.hpp"
#include "edgeps/convolve.hpp"
#include "edgeps/distance_transform.hpp"
#include "edgeps/components.hpp"
#include "edgeps/pgm.hpp"
#include "edgeps/edge_extract.hpp"
#include "edgeps/polar_hausdorff.hpp"
#include "edgeps/phd_smooth.hpp"
#include "edgeps/classic_losses.hpp"
#include "edgeps/metrics.hpp"
#include "edgeps/rng.hpp"
#include "edgeps/synthgen.hpp"
#include "edgeps/model.hpp"
#include "edgeps/trainer.hpp"
#include "edgeps/gradcheck.hpp"
