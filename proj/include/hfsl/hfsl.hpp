#pragma once

#include "hfsl/collab/protocols.hpp"
#include "hfsl/data/csv.hpp"
#include "hfsl/data/synthetic.hpp"
#include "hfsl/eval/client_metrics.hpp"
#include "hfsl/experiment/runner.hpp"
#include "hfsl/privacy/audit.hpp"
#include "hfsl/privacy/sweep.hpp"
#include "hfsl/uplift/propensity.hpp"
