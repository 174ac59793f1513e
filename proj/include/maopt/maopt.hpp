#pragma once

#include "maopt/barrier.hpp"
#include "maopt/channel_model.hpp"
#include "maopt/errors.hpp"
#include "maopt/grad_de.hpp"
#include "maopt/grad_mc.hpp"
#include "maopt/io_json.hpp"
#include "maopt/laga.hpp"
#include "maopt/rng.hpp"
#include "maopt/scenario.hpp"
#include "maopt/types.hpp"
#include "maopt/zf_precoding.hpp"
