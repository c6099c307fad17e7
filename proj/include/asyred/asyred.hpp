#pragma once

#include "battery.hpp"
#include "config.hpp"
#include "cost_model.hpp"
#include "crc32c.hpp"
#include "dirty_bitvector.hpp"
#include "experiment.hpp"
#include "fault_injection.hpp"
#include "paged_store.hpp"
#include "redundancy.hpp"
#include "reliability.hpp"
#include "scrubber.hpp"
#include "shadow_state.hpp"
#include "updater.hpp"
#include "workload.hpp"
