#pragma once

#include "rdsel/checkpoint.hpp"
#include "rdsel/config.hpp"
#include "rdsel/dataset.hpp"
#include "rdsel/disentangle.hpp"
#include "rdsel/errors.hpp"
#include "rdsel/gradcheck.hpp"
#include "rdsel/history.hpp"
#include "rdsel/matrix.hpp"
#include "rdsel/mine.hpp"
#include "rdsel/net.hpp"
#include "rdsel/policy.hpp"
#include "rdsel/rng.hpp"
#include "rdsel/svg.hpp"
#include "rdsel/trainer.hpp"
#include "rdsel/transport.hpp"
