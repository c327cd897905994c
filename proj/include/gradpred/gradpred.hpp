#pragma once

#include "gradpred/attacks.hpp"
#include "gradpred/common.hpp"
#include "gradpred/diffnet.hpp"
#include "gradpred/gradpredict.hpp"
#include "gradpred/harness.hpp"
#include "gradpred/ntklab.hpp"
#include "gradpred/tokenattack.hpp"
