// placeholder, implemented later in the build sequence
