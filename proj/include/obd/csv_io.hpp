// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "obd/decision.hpp"
#include "obd/simulator.hpp"

namespace obd {

/// Fixed column order, probabilities and utilities to 4 decimals.
std::string decision_table_csv(const DecisionTable& table);

/// One row per dose plus a "none" row for trials that selected nothing.
std::string operating_characteristics_csv(const OperatingCharacteristics& oc);

}  // namespace obd
