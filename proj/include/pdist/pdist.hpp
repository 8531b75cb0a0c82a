#pragma once

#include "pdist/bits.hpp"
#include "pdist/channel.hpp"
#include "pdist/codes.hpp"
#include "pdist/core.hpp"
#include "pdist/distill.hpp"
#include "pdist/pgm.hpp"
#include "pdist/pstate.hpp"
#include "pdist/rates.hpp"
#include "pdist/rng.hpp"
#include "pdist/tolerances.hpp"
