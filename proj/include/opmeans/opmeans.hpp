#pragma once

#include "opmeans/errors.hpp"
#include "opmeans/psd.hpp"
#include "opmeans/matrix_json.hpp"
#include "opmeans/representing_function.hpp"
#include "opmeans/measure.hpp"
#include "opmeans/connection.hpp"
#include "opmeans/scalar.hpp"
#include "opmeans/random.hpp"
#include "opmeans/verifier.hpp"
