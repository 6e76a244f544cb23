#pragma once

#include "ledg/numerics/error.hpp"
#include "ledg/numerics/tensor.hpp"
#include "ledg/numerics/tape.hpp"
#include "ledg/numerics/parameters.hpp"

#include "ledg/graphdata/snapshot.hpp"
#include "ledg/graphdata/ingest.hpp"
#include "ledg/graphdata/sbm.hpp"
#include "ledg/graphdata/sampling.hpp"
#include "ledg/graphdata/dataset_io.hpp"

#include "ledg/model/layers.hpp"
#include "ledg/model/ledg_model.hpp"
#include "ledg/model/checkpoint.hpp"

#include "ledg/meta/config.hpp"
#include "ledg/meta/episode.hpp"
#include "ledg/meta/train.hpp"
#include "ledg/meta/baseline.hpp"

#include "ledg/eval/metrics.hpp"
#include "ledg/eval/evaluate.hpp"
