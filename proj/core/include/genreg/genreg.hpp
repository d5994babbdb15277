#pragma once

#include "genreg/assignment.hpp"
#include "genreg/autodiff.hpp"
#include "genreg/backtracking.hpp"
#include "genreg/checkpoint.hpp"
#include "genreg/datasets.hpp"
#include "genreg/diagnostics.hpp"
#include "genreg/errors.hpp"
#include "genreg/image_io.hpp"
#include "genreg/layers.hpp"
#include "genreg/losses.hpp"
#include "genreg/metrics.hpp"
#include "genreg/models.hpp"
#include "genreg/operators.hpp"
#include "genreg/parallel.hpp"
#include "genreg/params.hpp"
#include "genreg/prox.hpp"
#include "genreg/solvers.hpp"
#include "genreg/sweep.hpp"
#include "genreg/tensor.hpp"
#include "genreg/total_variation.hpp"
#include "genreg/training.hpp"
