#pragma once

#include "baselines.hpp"
#include "cliques.hpp"
#include "errors.hpp"
#include "multibss.hpp"
#include "oracle.hpp"
#include "renewal.hpp"
#include "report.hpp"
#include "simulator.hpp"
#include "throughput.hpp"
#include "topology.hpp"
