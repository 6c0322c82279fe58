#ifndef ADVBATCH_ADVBATCH_HPP
#define ADVBATCH_ADVBATCH_HPP

#include "advbatch/attacks.hpp"
#include "advbatch/dataset.hpp"
#include "advbatch/error.hpp"
#include "advbatch/gradcheck.hpp"
#include "advbatch/half.hpp"
#include "advbatch/harness.hpp"
#include "advbatch/idx.hpp"
#include "advbatch/loss.hpp"
#include "advbatch/model.hpp"
#include "advbatch/random.hpp"
#include "advbatch/report.hpp"
#include "advbatch/standard.hpp"
#include "advbatch/tape.hpp"
#include "advbatch/tensor.hpp"
#include "advbatch/weights_io.hpp"

#endif  // ADVBATCH_ADVBATCH_HPP
