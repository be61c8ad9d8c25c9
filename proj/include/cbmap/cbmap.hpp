#pragma once

#include "cbmap/datasets.hpp"
#include "cbmap/embedder.hpp"
#include "cbmap/kmeans.hpp"
#include "cbmap/linalg.hpp"
#include "cbmap/membership.hpp"
#include "cbmap/metrics.hpp"
#include "cbmap/model_io.hpp"
