#pragma once

#include "gausstin/conditioning.hpp"
#include "gausstin/config.hpp"
#include "gausstin/errors.hpp"
#include "gausstin/gmm.hpp"
#include "gausstin/learner.hpp"
#include "gausstin/metrics.hpp"
#include "gausstin/replay.hpp"
#include "gausstin/report.hpp"
#include "gausstin/rng.hpp"
#include "gausstin/serialize.hpp"
#include "gausstin/stream.hpp"
#include "gausstin/trainer.hpp"

namespace gausstin {
inline constexpr const char* kVersion = "0.1.0";
}
