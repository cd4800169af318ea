#pragma once

// Umbrella header for the lvdd latent-tensor distillation library.

#include "lvdd/archive_io.hpp"
#include "lvdd/dpp.hpp"
#include "lvdd/error.hpp"
#include "lvdd/half.hpp"
#include "lvdd/hosvd.hpp"
#include "lvdd/linalg.hpp"
#include "lvdd/pipeline.hpp"
#include "lvdd/quantize.hpp"
#include "lvdd/rng.hpp"
#include "lvdd/tensor.hpp"
