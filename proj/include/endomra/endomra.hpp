#pragma once

#include "endomra/exact.hpp"
#include "endomra/linalg.hpp"
#include "endomra/residual.hpp"
#include "endomra/sft.hpp"
#include "endomra/torus.hpp"
#include "endomra/observable.hpp"
#include "endomra/measure.hpp"
#include "endomra/ruelle.hpp"
#include "endomra/solenoid.hpp"
#include "endomra/mra.hpp"
#include "endomra/experiment.hpp"
