#pragma once

#include "gpst/calibrate.hpp"
#include "gpst/complexity.hpp"
#include "gpst/errors.hpp"
#include "gpst/fit.hpp"
#include "gpst/gaussian.hpp"
#include "gpst/image.hpp"
#include "gpst/metrics.hpp"
#include "gpst/parallel.hpp"
#include "gpst/partition.hpp"
#include "gpst/render.hpp"
#include "gpst/store.hpp"
