from weakvalue.lab import Lab as Lab
