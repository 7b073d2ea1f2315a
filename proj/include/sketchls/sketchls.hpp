#pragma once

#include "bounds.hpp"
#include "config.hpp"
#include "dct.hpp"
#include "dense.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "io.hpp"
#include "lsqr.hpp"
#include "oracle.hpp"
#include "metrics.hpp"
#include "pipelines.hpp"
#include "problems.hpp"
#include "qr.hpp"
#include "random.hpp"
#include "sketch.hpp"
#include "svd.hpp"
#include "triangular.hpp"
