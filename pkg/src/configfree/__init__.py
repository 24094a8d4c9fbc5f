"""Configuration systems over finite groups: freedom parameters, counting and random-sparse stability."""
