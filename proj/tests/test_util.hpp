#pragma once

#include "doctest.h"
#include "levelrepair/error.hpp"

#define CHECK_ERROR_CODE(expr, expected)                          \
  do {                                                            \
    bool lr_thrown_ = false;                                      \
    try {                                                         \
      (void)(expr);                                               \
    } catch (const levelrepair::Error& e) {                       \
      lr_thrown_ = true;                                          \
      CHECK_MESSAGE(e.code() == (expected), e.what());            \
    }                                                             \
    CHECK_MESSAGE(lr_thrown_, "no levelrepair::Error from " #expr); \
  } while (0)
