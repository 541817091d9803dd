#pragma once

#include <mwtfault/calibration.hpp>
#include <mwtfault/config_io.hpp>
#include <mwtfault/core.hpp>
#include <mwtfault/fault_model.hpp>
#include <mwtfault/fusewire.hpp>
#include <mwtfault/rectifier_sim.hpp>
#include <mwtfault/switched_network.hpp>
#include <mwtfault/validation.hpp>
