#pragma once

#include "vrsom/error.hpp"
#include "vrsom/core_model.hpp"
#include "vrsom/text.hpp"
#include "vrsom/reference_tables.hpp"
#include "vrsom/photometry.hpp"
#include "vrsom/dataset_io.hpp"
#include "vrsom/stats.hpp"
#include "vrsom/preprocess.hpp"
#include "vrsom/metrics.hpp"
#include "vrsom/behavior.hpp"
#include "vrsom/simgen.hpp"
#include "vrsom/pipeline.hpp"
