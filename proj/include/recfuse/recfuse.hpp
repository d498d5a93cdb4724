#pragma once

#include "recfuse/augmentation.hpp"
#include "recfuse/benchmark.hpp"
#include "recfuse/config.hpp"
#include "recfuse/constraints.hpp"
#include "recfuse/core_model.hpp"
#include "recfuse/dc.hpp"
#include "recfuse/embeddings.hpp"
#include "recfuse/error.hpp"
#include "recfuse/eval_harness.hpp"
#include "recfuse/featurizer.hpp"
#include "recfuse/inference.hpp"
#include "recfuse/io.hpp"
#include "recfuse/learner.hpp"
#include "recfuse/model_io.hpp"
#include "recfuse/stagewise.hpp"
