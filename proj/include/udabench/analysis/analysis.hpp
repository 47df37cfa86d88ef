#pragma once

#include "udabench/analysis/correlation.hpp"
#include "udabench/analysis/gap.hpp"
#include "udabench/analysis/macro_micro.hpp"
#include "udabench/analysis/normalize.hpp"
#include "udabench/analysis/spearman.hpp"
#include "udabench/analysis/table.hpp"
