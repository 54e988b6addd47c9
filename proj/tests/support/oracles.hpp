#pragma once

#include "mmw2s/verify/oracles.hpp"
