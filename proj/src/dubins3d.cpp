namespace steerkit {}
