#pragma once

// Umbrella header.

#include "cogplan/cache.hpp"
#include "cogplan/claims.hpp"
#include "cogplan/core.hpp"
#include "cogplan/corpus.hpp"
#include "cogplan/dataset.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/expert.hpp"
#include "cogplan/generation.hpp"
#include "cogplan/metrics.hpp"
#include "cogplan/pipeline.hpp"
#include "cogplan/planner.hpp"
#include "cogplan/prompts.hpp"
#include "cogplan/remote_expert.hpp"
#include "cogplan/remote_search.hpp"
#include "cogplan/report.hpp"
#include "cogplan/retrieval.hpp"
#include "cogplan/scripted_expert.hpp"
#include "cogplan/text.hpp"
#include "cogplan/trace_io.hpp"
