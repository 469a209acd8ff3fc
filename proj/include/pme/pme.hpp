#pragma once

#include "pme/datagen.hpp"
#include "pme/errors.hpp"
#include "pme/init.hpp"
#include "pme/io.hpp"
#include "pme/lambda_select.hpp"
#include "pme/linalg.hpp"
#include "pme/matrix.hpp"
#include "pme/metrics.hpp"
#include "pme/pa.hpp"
#include "pme/projection.hpp"
#include "pme/rng.hpp"
#include "pme/spline.hpp"
#include "pme/templates.hpp"
