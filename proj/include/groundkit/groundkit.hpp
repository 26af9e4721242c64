#pragma once

// Umbrella header: the whole library.

#include "groundkit/corpus_io.hpp"
#include "groundkit/dataset.hpp"
#include "groundkit/embedding.hpp"
#include "groundkit/errors.hpp"
#include "groundkit/identifier.hpp"
#include "groundkit/losses.hpp"
#include "groundkit/markup.hpp"
#include "groundkit/mask.hpp"
#include "groundkit/matrix.hpp"
#include "groundkit/meteor.hpp"
#include "groundkit/metrics.hpp"
#include "groundkit/relational_encoder.hpp"
#include "groundkit/report.hpp"
#include "groundkit/rng.hpp"
#include "groundkit/stemmer.hpp"
#include "groundkit/tensor_file.hpp"
#include "groundkit/text.hpp"
