#pragma once

#include "genm/calculus.hpp"
#include "genm/core_model.hpp"
#include "genm/errors.hpp"
#include "genm/eval.hpp"
#include "genm/ingest/corpus.hpp"
#include "genm/ingest/runs.hpp"
#include "genm/ingest/synth.hpp"
#include "genm/optimizers.hpp"
#include "genm/surrogate.hpp"
