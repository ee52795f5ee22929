#pragma once

#include "pidlab/agreement.hpp"
#include "pidlab/dataset.hpp"
#include "pidlab/error.hpp"
#include "pidlab/info.hpp"
#include "pidlab/json_io.hpp"
#include "pidlab/label_space.hpp"
#include "pidlab/pid.hpp"
#include "pidlab/synth.hpp"
#include "pidlab/transport.hpp"
#include "pidlab/triple_dataset.hpp"
#include "pidlab/version.hpp"
