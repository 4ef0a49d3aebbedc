#pragma once

#include "entromap/errors.hpp"
#include "entromap/experiments.hpp"
#include "entromap/gaussian.hpp"
#include "entromap/io.hpp"
#include "entromap/linalg.hpp"
#include "entromap/maps.hpp"
#include "entromap/measures.hpp"
#include "entromap/parallel.hpp"
#include "entromap/point_cloud.hpp"
#include "entromap/rng.hpp"
#include "entromap/sinkhorn.hpp"
#include "entromap/version.hpp"
