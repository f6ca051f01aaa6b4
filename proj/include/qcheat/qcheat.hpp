#pragma once

#include "qcheat/error.hpp"
#include "qcheat/graded.hpp"
#include "qcheat/group.hpp"
#include "qcheat/invariants.hpp"
#include "qcheat/kernel.hpp"
#include "qcheat/marginals.hpp"
#include "qcheat/matrix.hpp"
#include "qcheat/mc.hpp"
#include "qcheat/popp.hpp"
#include "qcheat/qc_expansion.hpp"
#include "qcheat/quadrature.hpp"
#include "qcheat/rational.hpp"
#include "qcheat/rng.hpp"
#include "qcheat/special.hpp"
#include "qcheat/spectral.hpp"
#include "qcheat/tensor_symbols.hpp"
#include "qcheat/version.hpp"
