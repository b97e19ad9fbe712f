#pragma once

#include "hirqa/binio.hpp"
#include "hirqa/config.hpp"
#include "hirqa/dataset.hpp"
#include "hirqa/distort.hpp"
#include "hirqa/error.hpp"
#include "hirqa/features.hpp"
#include "hirqa/gradcheck.hpp"
#include "hirqa/image.hpp"
#include "hirqa/losses.hpp"
#include "hirqa/metrics.hpp"
#include "hirqa/model.hpp"
#include "hirqa/prompts.hpp"
#include "hirqa/rng.hpp"
#include "hirqa/trainer.hpp"
