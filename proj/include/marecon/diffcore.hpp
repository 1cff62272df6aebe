#pragma once

#include "marecon/diffcore/fft.hpp"
#include "marecon/diffcore/ops.hpp"
#include "marecon/diffcore/tape.hpp"
#include "marecon/diffcore/tensor.hpp"
