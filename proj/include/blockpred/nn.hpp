#pragma once

#include "blockpred/nn/checkpoint.hpp"
#include "blockpred/nn/gradcheck.hpp"
#include "blockpred/nn/layers.hpp"
#include "blockpred/nn/loss.hpp"
#include "blockpred/nn/optimizer.hpp"
#include "blockpred/nn/tensor.hpp"
