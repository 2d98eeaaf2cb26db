#pragma once

#include "seqot/core.hpp"
#include "seqot/cost.hpp"
#include "seqot/solvers.hpp"
#include "seqot/matching.hpp"
#include "seqot/embed.hpp"
#include "seqot/wgf.hpp"
#include "seqot/text.hpp"
#include "seqot/bleu.hpp"
#include "seqot/scoring.hpp"
#include "seqot/config.hpp"
