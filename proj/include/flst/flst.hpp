#pragma once

// Umbrella header for the federated student-teacher-scheduler simulator.

#include "flst/checkpoint.hpp"
#include "flst/config.hpp"
#include "flst/curriculum.hpp"
#include "flst/dataset.hpp"
#include "flst/datasets.hpp"
#include "flst/embedding.hpp"
#include "flst/encoder.hpp"
#include "flst/errors.hpp"
#include "flst/experiment.hpp"
#include "flst/federation.hpp"
#include "flst/matrix.hpp"
#include "flst/metrics.hpp"
#include "flst/mlp.hpp"
#include "flst/ranking.hpp"
#include "flst/rng.hpp"
#include "flst/scheduler.hpp"
#include "flst/teacher.hpp"
