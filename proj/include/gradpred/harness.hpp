#pragma once

#include "gradpred/harness/bench.hpp"
#include "gradpred/harness/config.hpp"
#include "gradpred/harness/dataset.hpp"
#include "gradpred/harness/gcg.hpp"
#include "gradpred/harness/metrics.hpp"
#include "gradpred/harness/ntk.hpp"
#include "gradpred/harness/report.hpp"
#include "gradpred/harness/sweep.hpp"
