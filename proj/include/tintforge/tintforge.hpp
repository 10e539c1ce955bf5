#pragma once

#include "tintforge/binding_guidance.hpp"
#include "tintforge/color_vocab.hpp"
#include "tintforge/colorspace.hpp"
#include "tintforge/correlation_analysis.hpp"
#include "tintforge/disambiguation.hpp"
#include "tintforge/distance_matrix.hpp"
#include "tintforge/embedding_store.hpp"
#include "tintforge/error.hpp"
#include "tintforge/kmeans.hpp"
#include "tintforge/pipeline.hpp"
#include "tintforge/rng.hpp"
#include "tintforge/swatch.hpp"
#include "tintforge/text.hpp"
#include "tintforge/tintbench_builder.hpp"
