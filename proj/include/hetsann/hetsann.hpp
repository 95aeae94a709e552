// SPDX-FileCopyrightText: (c) 2026 The hetsann-cpp Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hetsann/autodiff.hpp"
#include "hetsann/checkpoint.hpp"
#include "hetsann/commands.hpp"
#include "hetsann/config.hpp"
#include "hetsann/error.hpp"
#include "hetsann/gradcheck.hpp"
#include "hetsann/graph.hpp"
#include "hetsann/metrics.hpp"
#include "hetsann/model.hpp"
#include "hetsann/optim.hpp"
#include "hetsann/params.hpp"
#include "hetsann/split.hpp"
#include "hetsann/synth.hpp"
#include "hetsann/tal.hpp"
#include "hetsann/tensor.hpp"
#include "hetsann/trainer.hpp"
#include "hetsann/tsv.hpp"
