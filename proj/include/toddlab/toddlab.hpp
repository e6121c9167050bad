#pragma once

#include "toddlab/boundedness.hpp"
#include "toddlab/dynamics.hpp"
#include "toddlab/energy.hpp"
#include "toddlab/errors.hpp"
#include "toddlab/io.hpp"
#include "toddlab/rng.hpp"
#include "toddlab/scalar.hpp"
