#pragma once

#include "hidden/adam.hpp"
#include "hidden/dataset.hpp"
#include "hidden/encoder.hpp"
#include "hidden/evalmetrics.hpp"
#include "hidden/experiments.hpp"
#include "hidden/geometry.hpp"
#include "hidden/io.hpp"
#include "hidden/labelspace.hpp"
#include "hidden/linalg.hpp"
#include "hidden/rng.hpp"
#include "hidden/synthdata.hpp"
#include "hidden/trainer.hpp"
