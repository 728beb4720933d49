#pragma once

#include <gtest/gtest.h>

#include "medalchain/error.hpp"

// Asserts that `stmt` throws medalchain::Error with the given code.
#define EXPECT_CODE(stmt, expected)                                                 \
    do {                                                                        \
        try {                                                                   \
            stmt;                                                               \
            ADD_FAILURE() << "expected " << #expected;                              \
        } catch (const ::medalchain::Error& e_) {                               \
            EXPECT_EQ(e_.code(), ::medalchain::ErrorCode::expected) << e_.what();   \
        }                                                                       \
    } while (0)
