#pragma once

// Umbrella header for the engine and the HTTP service.

#include "promptaid/config.hpp"
#include "promptaid/core.hpp"
#include "promptaid/dataset.hpp"
#include "promptaid/embedding.hpp"
#include "promptaid/error.hpp"
#include "promptaid/evaluator.hpp"
#include "promptaid/gateway.hpp"
#include "promptaid/perturbation.hpp"
#include "promptaid/projection.hpp"
#include "promptaid/provenance.hpp"
#include "promptaid/report.hpp"
#include "promptaid/service.hpp"
#include "promptaid/text_metrics.hpp"
#include "promptaid/vector_index.hpp"
#include "promptaid/workbench.hpp"
