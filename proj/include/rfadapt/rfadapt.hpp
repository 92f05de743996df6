#pragma once

#include "rfadapt/benchmarks.hpp"
#include "rfadapt/bounds.hpp"
#include "rfadapt/checks.hpp"
#include "rfadapt/config.hpp"
#include "rfadapt/core.hpp"
#include "rfadapt/deadzone.hpp"
#include "rfadapt/features.hpp"
#include "rfadapt/hamiltonian.hpp"
#include "rfadapt/integrate.hpp"
#include "rfadapt/io.hpp"
#include "rfadapt/kernel.hpp"
#include "rfadapt/lyapunov.hpp"
#include "rfadapt/metrics.hpp"
#include "rfadapt/mirror.hpp"
#include "rfadapt/network.hpp"
#include "rfadapt/predictor.hpp"
#include "rfadapt/runner.hpp"
#include "rfadapt/stats.hpp"
#include "rfadapt/tape.hpp"
